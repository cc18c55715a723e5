// Deterministic instance corpus: every file is a pure function of the seed.

#include "commands.hpp"

#include <filesystem>

namespace varigeo::cli {

namespace {

namespace fs = std::filesystem;

Mat with_spectrum(Rng& rng, int m, int n, const std::vector<double>& sv) {
    Mat S = Mat::Zero(m, n);
    for (std::size_t i = 0; i < sv.size(); ++i) S(static_cast<long>(i), static_cast<long>(i)) = sv[i];
    return rng.orthonormal(m, m) * S * rng.orthonormal(n, n).transpose();
}

Mat sym(const Mat& A) { return 0.5 * (A + A.transpose()); }

class Writer {
public:
    explicit Writer(fs::path root) : root_(std::move(root)) {}

    void file(const std::string& rel, const json& j) {
        fs::path p = root_ / rel;
        fs::create_directories(p.parent_path());
        write_text_file(p.string(), j.dump(1) + "\n");
        files_.push_back(rel);
    }
    // A suggested invocation and the exit code it is expected to produce.
    void run(const std::string& command, const std::string& input, std::vector<std::string> args, int expect) {
        runs_.push_back(json{{"command", command}, {"input", input}, {"args", args}, {"expect_exit", expect}});
    }
    json manifest(std::uint64_t seed) const {
        return json{{"seed", seed}, {"files", files_}, {"runs", runs_}};
    }

private:
    fs::path root_;
    std::vector<std::string> files_;
    json runs_ = json::array();
};

void graphs(Writer& w, std::uint64_t seed) {
    w.file("graphs/triangle.json", to_json(complete_graph(3)));
    w.file("graphs/c5.json", to_json(cycle_graph(5)));
    w.file("graphs/empty-graph.json", to_json(edgeless_graph(4)));
    w.run("versoc", "graphs/triangle.json", {"--K", "3"}, kPass);
    w.run("versoc", "graphs/c5.json", {"--K", "3"}, kPass);
    w.run("versoc", "graphs/empty-graph.json", {"--K", "2"}, kPass);
    for (const auto& [name, G] : graph_corpus(seed)) {
        w.file("graphs/corpus/" + name + ".json", to_json(G));
        if (name == "petersen") w.run("versoc", "graphs/corpus/petersen.json", {"--K", "3"}, kPass);
    }
}

void tangent(Writer& w, Rng& rng) {
    Mat X = rng.low_rank(6, 5, 1);
    RankSpec spec{2, 5};
    MatrixPoint P = resolve_point(X);
    Mat eta = random_tangent_member(P, spec, rng);
    Mat zeta = random_second_order_member(P, eta, spec, rng);
    w.file("tangent/matrix_member.json", json{{"X", to_json(X)}, {"rank", 2}, {"eta", to_json(eta)}, {"zeta", to_json(zeta)}});
    w.run("tangent", "tangent/matrix_member.json", {"--set", "matrix", "--oracle"}, kPass);
    w.run("tangent", "tangent/matrix_member.json", {"--set", "matrix", "--order", "2", "--oracle"}, kPass);
    Mat bad = random_tangent_nonmember(P, spec, rng);
    w.file("tangent/matrix_nonmember.json", json{{"X", to_json(X)}, {"rank", 2}, {"eta", to_json(bad)}});
    w.run("tangent", "tangent/matrix_nonmember.json", {"--set", "matrix", "--oracle"}, kFail);

    Mat S = random_sym_low_rank(5, 1, 1, rng);
    SymPoint SP = resolve_sym(S);
    RankSpec sspec{3, 5};
    Mat seta = random_sym_tangent_member(SP, sspec, false, rng);
    w.file("tangent/sym_member.json", json{{"X", to_json(S)}, {"rank", 3}, {"eta", to_json(seta)}});
    w.run("tangent", "tangent/sym_member.json", {"--set", "sym", "--oracle"}, kPass);

    Mat Pm = random_sym_low_rank(5, 2, 0, rng);
    SymPoint PP = resolve_sym(Pm);
    Mat peta = random_sym_tangent_member(PP, sspec, true, rng);
    Mat pzeta = random_sym_second_order_member(PP, peta, sspec, true, rng);
    w.file("tangent/psd_member.json",
           json{{"X", to_json(Pm)}, {"rank", 3}, {"eta", to_json(peta)}, {"zeta", to_json(pzeta)}});
    w.run("tangent", "tangent/psd_member.json", {"--set", "psd", "--order", "2"}, kPass);

    ConstraintH H = ConstraintH::sphere();
    Mat Xs = random_feasible_point(H, 5, 4, 1, rng);
    MatrixPoint SPt = resolve_point(Xs);
    RankSpec ispec{2, 4};
    Mat ieta = random_tangent_member(SPt, ispec, rng);
    ieta -= (ieta.array() * Xs.array()).sum() / Xs.squaredNorm() * Xs;  // tangent to the sphere
    w.file("tangent/intersection_sphere.json",
           json{{"X", to_json(Xs)}, {"rank", 2}, {"eta", to_json(ieta)}, {"constraint", to_json(H)}});
    w.run("tangent", "tangent/intersection_sphere.json", {"--set", "intersection", "--oracle"}, kPass);

    for (const char* preset : {"tucker", "tt"}) {
        std::vector<int> dims{3, 3, 3};
        std::vector<int> ranks = std::string(preset) == "tucker" ? std::vector<int>{2, 2, 2} : std::vector<int>{2, 2};
        DimensionTree tree = std::string(preset) == "tucker" ? DimensionTree::tucker(dims, ranks)
                                                            : DimensionTree::tt(dims, ranks);
        TensorJet J = random_tensor_jet(tree, dims, rng);
        std::string rel = std::string("tangent/tensor_") + preset + ".json";
        w.file(rel, json{{"X", to_json(J.X)},
                         {"eta", to_json(J.eta)},
                         {"zeta", to_json(J.zeta)},
                         {"tree", tree_json(preset, ranks)}});
        w.run("tangent", rel, {"--set", "tensor", "--order", "2"}, kPass);
    }
}

void derivatives(Writer& w, Rng& rng) {
    Mat X = with_spectrum(rng, 5, 6, {3.0, 3.0, 1.5, 0.0, 0.0});
    Mat eta = rng.gaussian(5, 6), zeta = rng.gaussian(5, 6);
    w.file("derivative/sigma_repeated.json",
           json{{"kind", "sigma"}, {"X", to_json(X)}, {"eta", to_json(eta)}, {"zeta", to_json(zeta)}});
    for (const char* i : {"1", "3", "4"})
        w.run("derivative", "derivative/sigma_repeated.json", {"--index", i, "--order", "2"}, kPass);

    Mat Q = rng.orthonormal(5, 5);
    Vec ev(5);
    ev << 2.0, 2.0, 0.0, 0.0, -1.0;
    Mat S = Q * ev.asDiagonal() * Q.transpose();
    S = sym(S);
    w.file("derivative/lambda.json", json{{"kind", "lambda"},
                                          {"X", to_json(S)},
                                          {"eta", to_json(sym(rng.gaussian(5, 5)))},
                                          {"zeta", to_json(sym(rng.gaussian(5, 5)))}});
    w.run("derivative", "derivative/lambda.json", {"--index", "3", "--order", "2"}, kPass);
}

void stationarity(Writer& w, Rng& rng) {
    Mat T = with_spectrum(rng, 5, 4, {4.0, 3.0, 2.0, 1.0});
    Eigen::JacobiSVD<Mat> svd(T, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat& U = svd.matrixU();
    const Mat& V = svd.matrixV();
    Vec s = svd.singularValues();
    Mat best = s(0) * U.col(0) * V.col(0).transpose() + s(1) * U.col(1) * V.col(1).transpose();
    Mat saddle = s(0) * U.col(0) * V.col(0).transpose() + s(2) * U.col(2) * V.col(2).transpose();
    w.file("stationarity/objective_ls.json", json{{"kind", "least_squares"}, {"target", to_json(T)}});
    w.file("stationarity/best.json", json{{"X", to_json(best)}, {"rank", 2}});
    w.file("stationarity/saddle.json", json{{"X", to_json(saddle)}, {"rank", 2}});
    w.run("stationarity", "stationarity/best.json", {"--objective", "stationarity/objective_ls.json"}, kPass);
    w.run("stationarity", "stationarity/saddle.json", {"--objective", "stationarity/objective_ls.json"}, kFail);
}

void param(Writer& w, Rng& rng) {
    w.file("param/lr_deficient.json", to_json(random_lr_point(5, 4, 2, 1, rng)));
    w.file("param/desing_deficient.json", to_json(random_desing_point(5, 4, 2, 1, rng)));
    w.file("param/lr_full.json", to_json(random_lr_point(5, 4, 2, 2, rng)));
    w.run("param", "param/lr_deficient.json", {}, kFail);
    w.run("param", "param/desing_deficient.json", {}, kFail);
    w.run("param", "param/lr_full.json", {}, kPass);
}

void graphcone(Writer& w, Rng& rng) {
    {
        GraphPoint G = random_graph_point(5, 4, 2, 1, 3, rng);
        auto [eta, xi] = random_graph_tangent(G, rng);
        NormalPair v = frechet_normal_construct(G, random_frechet_params(G, rng));
        json base{{"X", to_json(G.P.X)}, {"Y", to_json(G.Y)}, {"rank", 2}};
        json t = base;
        t["eta"] = to_json(eta);
        t["xi"] = to_json(xi);
        w.file("graphcone/tangent_pair.json", t);
        w.run("graphcone", "graphcone/tangent_pair.json", {"--check", "tangent"}, kPass);
        json f = base;
        f["upsilon"] = to_json(v.upsilon);
        f["omega"] = to_json(v.omega);
        w.file("graphcone/frechet_pair.json", f);
        w.run("graphcone", "graphcone/frechet_pair.json", {"--check", "frechet"}, kPass);
        w.run("graphcone", "graphcone/frechet_pair.json", {"--check", "mordukhovich"}, kPass);
    }
    {
        // 4 x 4 family: r = 2, s = 1, ell = 3, rl = rh = 2, z1 = z2 = 1/i
        GraphPoint G = random_graph_point(4, 4, 2, 1, 3, rng);
        Stratification S = make_stratification(G, 2, 2, &rng);
        ThetaGenerator gen{Vec::Ones(1), Vec::Ones(1), Vec::Ones(1), Vec::Ones(1)};
        ThetaCandidate th{theta_limit(gen), gen};
        MordukhovichParams p = random_mordukhovich_params(G, S, th.D, rng);
        NormalPair v = mordukhovich_construct(G, S, p, th);
        json base{{"X", to_json(G.P.X)}, {"Y", to_json(G.Y)}, {"rank", 2}, {"stratification", to_json(S)}};
        json c = base;
        c["theta"] = json{{"D", to_json(th.D)}, {"generator", to_json(gen)}};
        c["params"] = to_json(p);
        w.file("graphcone/family4x4.json", c);
        w.run("graphcone", "graphcone/family4x4.json", {"--check", "construct"}, kPass);
        json m = base;
        m["upsilon"] = to_json(v.upsilon);
        m["omega"] = to_json(v.omega);
        w.file("graphcone/family4x4_normal.json", m);
        w.run("graphcone", "graphcone/family4x4_normal.json", {"--check", "mordukhovich"}, kPass);
        w.run("graphcone", "graphcone/family4x4_normal.json", {"--check", "frechet"}, kFail);
    }
    {
        // L = 1/2 ||X||^2, F = 1/2 ||X - Xb||^2 with a dummy upper-level variable
        Mat Xb = Mat::Zero(3, 3);
        Xb(0, 1) = 1.0;
        BilevelInstance inst;
        inst.q = 1;
        inst.m = inst.n = 3;
        inst.grad_x_L = Vec::Zero(1);
        inst.G = Vec(0);
        inst.grad_G = Mat(1, 0);
        inst.Jx_gradxF = Mat::Zero(1, 9);
        inst.JX_gradXF = Mat::Identity(9, 9);
        inst.grad_X_L = Xb;
        inst.grad_X_F = Mat::Zero(3, 3);
        w.file("graphcone/bilevel_toy.json",
               json{{"X", to_json(Xb)},
                    {"Y", to_json(Mat::Zero(3, 3))},
                    {"rank", 1},
                    {"instance", to_json(inst)},
                    {"multipliers", {{"mu", 1.0}, {"lambda", json::array()}, {"delta", to_json(Mat::Zero(3, 3))}}},
                    {"upsilon", to_json(Mat::Zero(3, 3))},
                    {"omega", to_json(Mat(-Xb))}});
        w.run("graphcone", "graphcone/bilevel_toy.json", {"--check", "bilevel"}, kPass);
    }
}

}  // namespace

CommandResult cmd_corpus(const RunConfig& c) {
    if (c.out.empty()) throw InputError("corpus needs --out DIR");
    Writer w{fs::path(c.out)};
    Rng rng(c.seed);
    graphs(w, c.seed);
    tangent(w, rng);
    derivatives(w, rng);
    stationarity(w, rng);
    param(w, rng);
    graphcone(w, rng);
    json manifest = w.manifest(c.seed);
    w.file("manifest.json", manifest);
    json r{{"command", "corpus"},
           {"seed", c.seed},
           {"tolerances",
            {{"rank_tol", c.rank_tol}, {"tol", c.tol}, {"fd_tol_first", c.fd_tol_first}, {"fd_tol_second", c.fd_tol_second}}},
           {"out", c.out},
           {"files", manifest["files"].size() + 1},
           {"runs", manifest["runs"].size()},
           {"status", "constructed"},
           {"exit_code", 0}};
    return {std::move(r), kPass, {}};
}

}  // namespace varigeo::cli
