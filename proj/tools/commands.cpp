#include "commands.hpp"

#include "varigeo/derivatives.hpp"
#include "varigeo/oracle.hpp"

#include <cmath>
#include <sstream>

namespace varigeo::cli {

namespace {

double inner(const Mat& A, const Mat& B) { return (A.array() * B.array()).sum(); }
Vec vec(const Mat& M) { return Eigen::Map<const Vec>(M.data(), M.size()); }
Mat unvec(const Vec& v, int m, int n) { return Eigen::Map<const Mat>(v.data(), m, n); }

json header(const RunConfig& c) {
    return json{{"command", c.command},
                {"input", c.input},
                {"seed", c.seed},
                {"tolerances",
                 {{"rank_tol", c.rank_tol},
                  {"tol", c.tol},
                  {"fd_tol_first", c.fd_tol_first},
                  {"fd_tol_second", c.fd_tol_second}}}};
}

CommandResult finish(json r, int code, const char* label = nullptr) {
    static const char* names[] = {"pass", "fail", "undetermined"};
    r["status"] = label ? label : names[code];
    r["exit_code"] = code;
    return {std::move(r), code, {}};
}

int order_or(const RunConfig& c, int dflt) {
    int o = c.order == 0 ? dflt : c.order;
    if (o != 1 && o != 2) throw InputError("--order must be 1 or 2");
    return o;
}

RankSpec rank_spec(const RunConfig& c, const json& in, long m, long n) {
    int r = c.rank >= 0 ? c.rank : int_from(need(in, "rank", ""), "/rank");
    int k = static_cast<int>(std::min(m, n));
    if (r < 0 || r > k) throw InputError("rank " + std::to_string(r) + " outside [0, " + std::to_string(k) + "]");
    return {r, k};
}

Mat same_shape(const json& in, const std::string& key, const Mat& X) {
    Mat M = mat_from(need(in, key, ""), "/" + key);
    if (M.rows() != X.rows() || M.cols() != X.cols())
        throw InputError("/" + key + ": shape differs from X");
    return M;
}

void require_symmetric(const Mat& M, const std::string& what) {
    if (M.rows() != M.cols() ||
        (M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
        throw InputError(what + ": expected a symmetric matrix");
}

json cq_json(const CqReport& q) {
    return json{{"name", q.name}, {"holds", q.holds}, {"margin", q.margin}, {"detail", q.detail}};
}

json intersection_json(const IntersectionCertificate& c) {
    return json{{"member", c.member},
                {"cone_member", c.cone_member},
                {"h_member", c.h_member},
                {"h_residual", c.h_residual},
                {"h_threshold", c.h_threshold},
                {"cq", cq_json(c.cq)}};
}

std::string decay_csv(const DecayFit& f) {
    std::ostringstream os;
    os.precision(17);
    os << "t,residual\n";
    for (std::size_t i = 0; i < f.t_grid.size(); ++i) os << f.t_grid[i] << "," << f.residuals[i] << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------

CommandResult cmd_tangent(const RunConfig& c) {
    json in = read_json_file(c.input);
    const int order = order_or(c, 1);
    json r = header(c);
    r["set"] = c.set;
    r["order"] = order;

    bool member = false;
    bool certified = true;  // false when the verdict rests on an unverified qualification
    SetProjector proj;
    Mat Xo, eo, zo;

    if (c.set == "matrix") {
        Mat X = mat_from(need(in, "X", ""), "/X");
        Mat eta = same_shape(in, "eta", X);
        RankSpec spec = rank_spec(c, in, X.rows(), X.cols());
        MatrixPoint P = resolve_point(X, c.rank_tol);
        if (P.s > spec.r) throw InputError("X has rank " + std::to_string(P.s) + " > r");
        r["rank"] = spec.r;
        r["s"] = P.s;
        TangentCertificate t = tangent_membership(P, eta, spec);
        r["tangent"] = json{{"member", t.member},
                            {"violation", t.violation},
                            {"threshold", t.threshold},
                            {"normal_spectrum", vec_json(t.normal_spectrum)},
                            {"blocks",
                             {{"W1", to_json(t.blocks.W1)},
                              {"W2", to_json(t.blocks.W2)},
                              {"W3", to_json(t.blocks.W3)},
                              {"K", to_json(t.blocks.K)}}}};
        member = t.member;
        Xo = X;
        eo = eta;
        if (order == 2) {
            Mat zeta = same_shape(in, "zeta", X);
            zo = zeta;
            if (!t.member) {
                r["second_order"] = json{{"member", false}, {"reason", "eta is not a tangent vector"}};
                member = false;
            } else {
                SecondOrderCertificate s = second_order_membership(P, eta, zeta, spec);
                const SecondOrderElement& e = s.element;
                r["second_order"] = json{{"member", s.member},
                                         {"ell", e.ell},
                                         {"ell_gap", e.ell_gap},
                                         {"violation", s.violation},
                                         {"threshold", s.threshold},
                                         {"j_spectrum", vec_json(s.j_spectrum)},
                                         {"blocks",
                                          {{"W1p", to_json(e.W1p)},
                                           {"W2p", to_json(e.W2p)},
                                           {"W3p", to_json(e.W3p)},
                                           {"J", to_json(e.J)}}}};
                member = s.member;
            }
        }
        proj = bounded_rank_projector(spec.r);
    } else if (c.set == "sym" || c.set == "psd") {
        const bool psd = c.set == "psd";
        Mat X = mat_from(need(in, "X", ""), "/X");
        require_symmetric(X, "/X");
        Mat eta = same_shape(in, "eta", X);
        require_symmetric(eta, "/eta");
        RankSpec spec = rank_spec(c, in, X.rows(), X.cols());
        SymPoint P = resolve_sym(X, c.rank_tol);
        if (P.s > spec.r) throw InputError("X has rank " + std::to_string(P.s) + " > r");
        if (psd && P.s_minus > 0) throw InputError("/X: not positive semidefinite");
        r["rank"] = spec.r;
        r["s"] = P.s;
        SymTangentCertificate t = psd ? tangent_psd(P, spec, eta) : tangent_sym(P, spec, eta);
        r["tangent"] = json{{"member", t.member},
                            {"j_pos", t.j_pos},
                            {"j_neg", t.j_neg},
                            {"j_spectrum", vec_json(t.j_spectrum)},
                            {"threshold", t.threshold}};
        member = t.member;
        Xo = X;
        eo = eta;
        if (order == 2) {
            Mat zeta = same_shape(in, "zeta", X);
            require_symmetric(zeta, "/zeta");
            zo = zeta;
            if (!t.member) {
                r["second_order"] = json{{"member", false}, {"reason", "eta is not a tangent vector"}};
                member = false;
            } else {
                SymSecondOrderCertificate s = psd ? tangent2_psd(P, eta, zeta, spec) : tangent2_sym(P, eta, zeta, spec);
                r["second_order"] = json{{"member", s.member},
                                         {"ell", s.ell},
                                         {"l_spectrum", vec_json(s.l_spectrum)},
                                         {"violation", s.violation},
                                         {"threshold", s.threshold},
                                         {"reason", s.reason}};
                member = s.member;
            }
        }
        proj = psd ? psd_bounded_rank_projector(spec.r) : sym_bounded_rank_projector(spec.r);
    } else if (c.set == "intersection") {
        Mat X = mat_from(need(in, "X", ""), "/X");
        Mat eta = same_shape(in, "eta", X);
        ConstraintH H = constraint_from(need(in, "constraint", ""), "/constraint");
        std::string cone = "matrix";
        if (const json* cj = maybe(in, "cone")) cone = str_from(*cj, "/cone");
        if (cone != "matrix" && cone != "sym" && cone != "psd") throw InputError("/cone: expected matrix, sym or psd");
        RankSpec spec = rank_spec(c, in, X.rows(), X.cols());
        try {
            check_feasible(X, H, c.rank_tol);
        } catch (const std::invalid_argument& ex) {
            throw InputError(std::string("/X: ") + ex.what());
        }
        r["rank"] = spec.r;
        r["constraint"] = to_string(H.kind);
        r["cone"] = cone;
        Mat zeta;
        if (order == 2) zeta = same_shape(in, "zeta", X);
        IntersectionCertificate t;
        if (cone == "matrix") {
            MatrixPoint P = resolve_point(X, c.rank_tol);
            if (P.s > spec.r) throw InputError("X has rank " + std::to_string(P.s) + " > r");
            t = order == 1 ? tangent_intersection(P, H, spec, eta) : tangent2_intersection(P, H, spec, eta, zeta);
            proj = intersection_projector(H, spec.r);
        } else {
            require_symmetric(X, "/X");
            require_symmetric(eta, "/eta");
            if (order == 2) require_symmetric(zeta, "/zeta");
            SymPoint P = resolve_sym(X, c.rank_tol);
            if (P.s > spec.r) throw InputError("X has rank " + std::to_string(P.s) + " > r");
            SymCone sc = cone == "psd" ? SymCone::psd : SymCone::symmetric;
            if (sc == SymCone::psd && P.s_minus > 0) throw InputError("/X: not positive semidefinite");
            t = order == 1 ? tangent_intersection(P, H, spec, eta, sc)
                           : tangent2_intersection(P, H, spec, eta, zeta, sc);
            proj = sym_intersection_projector(H, spec.r, sc);
        }
        r[order == 1 ? "tangent" : "second_order"] = intersection_json(t);
        member = t.member;
        // The conjunction contains the cone of the intersection; equality needs the qualification.
        certified = !t.member || t.cq.holds;
        Xo = X;
        eo = eta;
        zo = zeta;
    } else if (c.set == "tensor") {
        Tensor X = tensor_from(need(in, "X", ""), "/X");
        Tensor eta = tensor_from(need(in, "eta", ""), "/eta");
        if (eta.dims != X.dims) throw InputError("/eta: dims differ from X");
        DimensionTree tree = tree_from(need(in, "tree", ""), X.dims, "/tree");
        TensorCertificate t;
        Tensor zeta;
        if (order == 1) {
            t = tensor_tangent_membership(X, tree, eta);
        } else {
            zeta = tensor_from(need(in, "zeta", ""), "/zeta");
            if (zeta.dims != X.dims) throw InputError("/zeta: dims differ from X");
            t = tensor_tangent2_membership(X, tree, eta, zeta);
        }
        json nodes = json::array();
        for (const NodeCheck& nc : t.nodes)
            nodes.push_back(json{{"modes", mode_label(nc.modes)},
                                 {"rank", nc.rank},
                                 {"constrained", nc.constrained},
                                 {"member", nc.member},
                                 {"violation", nc.violation}});
        r["tree"] = to_string(tree.preset);
        r[order == 1 ? "tangent" : "second_order"] = json{{"member", t.member}, {"nodes", std::move(nodes)}};
        member = t.member;
        proj = tensor_truncation_projector(tree, X.dims);
        Xo = as_column(X);
        eo = as_column(eta);
        if (order == 2) zo = as_column(zeta);
    } else {
        throw InputError("--set must be one of matrix, sym, psd, intersection, tensor");
    }

    r["member"] = member;
    r["certified"] = certified;
    std::string agreement = "not_run";
    std::string csv;
    if (c.oracle) {
        DecayFit f = order == 1 ? decay_fit_linear(Xo, eo, proj) : decay_fit_parabolic(Xo, eo, zo, proj);
        DecayClass want = order == 1 ? (member ? DecayClass::order_gt_1 : DecayClass::order_le_1)
                                     : (member ? DecayClass::order_gt_2 : DecayClass::order_le_2);
        agreement = f.classification == DecayClass::ambiguous ? "ambiguous"
                    : f.classification == want                ? "agree"
                                                              : "disagree";
        r["oracle"] = json{{"projector", proj.name},
                           {"slope", f.slope},
                           {"r2", f.r2},
                           {"used_points", f.used_points},
                           {"saturated", f.saturated},
                           {"classification", to_string(f.classification)},
                           {"agreement", agreement}};
        csv = decay_csv(f);
    }
    int code = !certified || agreement == "disagree" ? kUndetermined : member ? kPass : kFail;
    CommandResult out = finish(std::move(r), code);
    out.csv = std::move(csv);
    return out;
}

// ---------------------------------------------------------------------------

CommandResult cmd_derivative(const RunConfig& c) {
    json in = read_json_file(c.input);
    const int order = order_or(c, 1);
    std::string kind = "sigma";
    if (const json* k = maybe(in, "kind")) kind = str_from(*k, "/kind");
    if (kind != "sigma" && kind != "lambda") throw InputError("/kind: expected sigma or lambda");
    Mat X = mat_from(need(in, "X", ""), "/X");
    Mat eta = same_shape(in, "eta", X);
    Mat zeta = order == 2 ? same_shape(in, "zeta", X) : Mat::Zero(X.rows(), X.cols());
    const int i = c.index;

    json r = header(c);
    r["kind"] = kind;
    r["index"] = i;
    r["order"] = order;

    double d1 = 0.0, d2 = 0.0;
    bool ambiguous = false;
    SpectralValuer val;
    val.index = i;
    if (kind == "sigma") {
        const int k = static_cast<int>(std::min(X.rows(), X.cols()));
        if (i < 1 || i > k) throw InputError("--index must lie in [1, min(m, n)]");
        MatrixPoint P = resolve_point(X, c.rank_tol);
        IndexPartition part = partition_indices(P, eta);
        d1 = sigma_derivative_1(P, i, eta);
        if (order == 2) d2 = sigma_derivative_2(P, i, eta, zeta);
        const int qa = part.q_a[i - 1], qb = part.q_b[i - 1];
        std::string branch = qa <= part.t ? "positive_cluster" : qb <= part.N_beta ? "beta_positive" : "beta_zero";
        r["partition"] = json{{"s", part.s},
                              {"t", part.t},
                              {"N_beta", part.N_beta},
                              {"q_a", qa},
                              {"q_b", qb},
                              {"branch", branch},
                              {"transposed", part.transposed},
                              {"ambiguous", part.ambiguous},
                              {"diagnostics", part.diagnostics}};
        ambiguous = part.ambiguous;
        val.kind = SpectralValuer::Kind::sigma;
    } else {
        require_symmetric(X, "/X");
        require_symmetric(eta, "/eta");
        if (order == 2) require_symmetric(zeta, "/zeta");
        if (i < 1 || i > X.rows()) throw InputError("--index must lie in [1, n]");
        SymPoint P = resolve_sym(X, c.rank_tol);
        d1 = lambda_derivative_1(P, i, eta);
        if (order == 2) d2 = lambda_derivative_2(P, i, eta, zeta);
        val.kind = SpectralValuer::Kind::lambda;
    }

    FdReport f1 = fd_check(val, X, eta, zeta, 1, d1);
    bool ok = f1.rel_gap <= c.fd_tol_first;
    auto fd_json = [](const FdReport& f) {
        return json{{"closed", f.closed_value}, {"fd", f.fd_value}, {"abs_gap", f.abs_gap},
                    {"rel_gap", f.rel_gap},     {"spread", f.spread}};
    };
    r["first"] = fd_json(f1);
    if (order == 2) {
        FdReport f2 = fd_check(val, X, eta, zeta, 2, d2, d1);
        r["second"] = fd_json(f2);
        ok = ok && f2.rel_gap <= c.fd_tol_second;
    }
    return finish(std::move(r), ok ? kPass : ambiguous ? kUndetermined : kFail);
}

// ---------------------------------------------------------------------------

CommandResult cmd_stationarity(const RunConfig& c) {
    json in = read_json_file(c.input);
    const int order = order_or(c, 2);
    Mat X = mat_from(need(in, "X", ""), "/X");
    RankSpec spec = rank_spec(c, in, X.rows(), X.cols());
    json obj_doc;
    std::string obj_ctx = "/objective";
    if (!c.objective.empty()) {
        obj_doc = read_json_file(c.objective);
        obj_ctx = "";
    } else {
        obj_doc = need(in, "objective", "");
    }
    Objective f = objective_from(obj_doc, obj_ctx);
    if (f.kind == Objective::Kind::quadratic || f.kind == Objective::Kind::least_squares) {
        // shape of the objective must match X
        Mat g = f.gradient(X);
        if (g.rows() != X.rows() || g.cols() != X.cols()) throw InputError("objective shape differs from X");
    }
    std::optional<ConstraintH> H;
    if (const json* h = maybe(in, "constraint")) {
        H = constraint_from(*h, "/constraint");
        if (order == 2) throw InputError("second-order certification is available without a constraint only");
        try {
            check_feasible(X, *H, c.rank_tol);
        } catch (const std::invalid_argument& ex) {
            throw InputError(std::string("/X: ") + ex.what());
        }
    }
    MatrixPoint P = resolve_point(X, c.rank_tol);
    if (P.s > spec.r) throw InputError("X has rank " + std::to_string(P.s) + " > r");

    json r = header(c);
    r["rank"] = spec.r;
    r["s"] = P.s;
    r["order"] = order;
    r["objective"] = to_string(f.kind);
    if (H) r["constraint"] = to_string(H->kind);

    StationarityReport s1 = check_first_order(P, f, spec, H, c.rank_tol);
    r["first_order"] = json{{"verdict", to_string(s1.first_order)},
                            {"residual", s1.first_residual},
                            {"threshold", s1.first_threshold}};
    if (s1.first_order != Verdict::pass || order == 1) {
        int code = s1.first_order == Verdict::pass ? kPass : s1.first_order == Verdict::fail ? kFail : kUndetermined;
        return finish(std::move(r), code);
    }
    SecondOrderOptions opt;
    opt.tol = c.tol;
    opt.seed = c.seed;
    StationarityReport s2 = check_second_order(P, f, spec, opt);
    r["second_order"] = json{{"verdict", to_string(s2.second_order)},
                             {"curvature", s2.curvature},
                             {"level", to_string(s2.level)},
                             {"rank_deficient", s2.rank_deficient},
                             {"grid_gap", s2.grid_gap},
                             {"note", s2.note},
                             {"witness", to_json(s2.witness)}};
    int code = kUndetermined;
    if (s2.second_order == Verdict::fail) code = kFail;  // the witness direction is the certificate
    if (s2.second_order == Verdict::pass && s2.level == Certification::exact) code = kPass;
    return finish(std::move(r), code);
}

// ---------------------------------------------------------------------------

CommandResult cmd_versoc(const RunConfig& c) {
    Graph G = graph_from(read_json_file(c.input));
    if (c.K < 2) throw InputError("--K must be at least 2");
    if (G.n > 12) throw InputError("graphs are limited to 12 vertices");
    const int omega = omega_bruteforce(G);
    const double formula = versoc_lambda_formula(omega, c.K);
    VersocLambda num = versoc_lambda_numeric(G, c.K, c.seed);
    FptasGap gap = fptas_gap_check(G, c.K);
    const bool clique = omega >= c.K;
    const bool sign_answer = num.lambda_enum < -c.tol;
    const double identity_gap = std::abs(num.lambda_enum - formula);

    json r = header(c);
    r["n"] = G.n;
    r["edges"] = static_cast<int>(G.edges.size());
    r["K"] = c.K;
    r["omega"] = omega;
    r["lambda_formula"] = formula;
    r["lambda_numeric"] = num.lambda_enum;
    r["lambda_ascent"] = num.lambda_ascent;
    r["motzkin_straus"] = num.motzkin_straus;
    r["supports"] = num.supports;
    r["identity_gap"] = identity_gap;
    r["clique"] = clique;
    r["sign_answer"] = sign_answer;
    r["fptas"] = json{{"epsilon", gap.epsilon}, {"separated", gap.separated}};
    const bool ok = identity_gap <= c.tol && sign_answer == clique && gap.separated;
    return finish(std::move(r), ok ? kPass : kFail);
}

// ---------------------------------------------------------------------------

CommandResult cmd_param(const RunConfig& c) {
    LiftedPoint Y = lifted_from(read_json_file(c.input));
    RankSpec spec{Y.r(), std::min(Y.m(), Y.n())};
    if (c.rank >= 0 && c.rank != spec.r) throw InputError("--rank differs from the parameterization rank");
    LQReport rep = two_two_check(Y, spec);

    json r = header(c);
    r["kind"] = to_string(Y.kind);
    r["rank"] = spec.r;
    r["s"] = rep.s;
    r["im_L_dim"] = rep.im_L_dim;
    r["tangent_dim"] = rep.tangent_dim;
    r["full_image"] = rep.full_image;
    r["two_two"] = rep.two_two;
    if (Y.kind == LiftedPoint::Kind::desing) {
        CompositionReport cr = desing_composition_check(Y, spec);
        r["composition"] = json{{"direct_dim", cr.direct_dim}, {"composed_dim", cr.composed_dim}, {"agree", cr.agree}};
    }
    if (!rep.witness) return finish(std::move(r), kPass);

    const Mat& w = *rep.witness;
    Vec wv = vec(w);
    Mat Hq = -(wv * wv.transpose()) / wv.squaredNorm();
    Mat X = Y.image();
    Mat C = -unvec(Hq * vec(X), Y.m(), Y.n());
    Objective f = make_quadratic(Hq, C);
    LiftedSecondOrder lso = lifted_second_order(Y, f, c.tol);
    const double curv = inner(w, f.hessian_apply(X, w));
    r["witness"] = to_json(w);
    r["counterexample"] = json{{"objective", objective_json(Hq, C)},
                               {"lifted_gradient_norm", lso.gradient_norm},
                               {"lifted_min_eig", lso.min_eig},
                               {"lifted_second_order", lso.pass},
                               {"ambient_curvature", curv},
                               {"curvature_ratio", curv / w.squaredNorm()}};
    return finish(std::move(r), kFail);
}

// ---------------------------------------------------------------------------

int verdict_code(ThetaVerdict v) {
    switch (v) {
    case ThetaVerdict::member_witnessed: return kPass;
    case ThetaVerdict::undetermined: return kUndetermined;
    case ThetaVerdict::rejected: return kFail;
    }
    return kFail;
}

json mordukhovich_json(const MordukhovichCertificate& m) {
    json j{{"member", m.member},
           {"verdict", to_string(m.verdict)},
           {"D_solved", to_json(m.D_solved)},
           {"D_completed", to_json(m.D_completed)},
           {"generator", m.generator ? to_json(*m.generator) : json(nullptr)},
           {"violations", violations_json(m.violations)},
           {"diagnostics", m.diagnostics}};
    return j;
}

CommandResult cmd_graphcone(const RunConfig& c) {
    json in = read_json_file(c.input);
    Mat X = mat_from(need(in, "X", ""), "/X");
    Mat Yn = same_shape(in, "Y", X);
    RankSpec spec = rank_spec(c, in, X.rows(), X.cols());
    GraphPoint G;
    try {
        G = make_graph_point(X, Yn, spec.r);
    } catch (const std::invalid_argument& ex) {
        throw InputError(std::string("(X, Y): ") + ex.what());
    }
    json r = header(c);
    r["check"] = c.check;
    r["rank"] = spec.r;
    r["point"] = json{{"s", G.s}, {"ell", G.ell}, {"rank_Y", G.k - G.ell}};

    if (c.check == "tangent") {
        Mat eta = same_shape(in, "eta", X), xi = same_shape(in, "xi", X);
        GraphTangentCertificate t = graph_tangent_membership(G, eta, xi, c.tol);
        r["member"] = t.member;
        r["threshold"] = t.threshold;
        r["violations"] = violations_json(t.violations);
        return finish(std::move(r), t.member ? kPass : kFail);
    }
    if (c.check == "frechet") {
        NormalPair v{same_shape(in, "upsilon", X), same_shape(in, "omega", X)};
        FrechetCertificate t = frechet_normal_membership(G, v, c.tol);
        r["member"] = t.member;
        r["threshold"] = t.threshold;
        r["violations"] = violations_json(t.violations);
        return finish(std::move(r), t.member ? kPass : kFail);
    }
    if (c.check == "mordukhovich") {
        NormalPair v{same_shape(in, "upsilon", X), same_shape(in, "omega", X)};
        Stratification S = stratification_from(maybe(in, "stratification"), G, "/stratification");
        MordukhovichCertificate m = mordukhovich_verify(G, S, v, c.tol);
        r["stratification"] = json{{"rl", S.rl}, {"rh", S.rh}};
        r["mordukhovich"] = mordukhovich_json(m);
        return finish(std::move(r), verdict_code(m.verdict));
    }
    if (c.check == "construct") {
        Stratification S = stratification_from(maybe(in, "stratification"), G, "/stratification");
        ThetaCandidate th = theta_from(need(in, "theta", ""), "/theta");
        MordukhovichParams p = mordukhovich_params_from(need(in, "params", ""), G, S, "/params");
        NormalPair v;
        try {
            v = mordukhovich_construct(G, S, p, th);
        } catch (const std::invalid_argument& ex) {
            throw InputError(std::string("/params: ") + ex.what());
        }
        r["stratification"] = json{{"rl", S.rl}, {"rh", S.rh}};
        r["upsilon"] = to_json(v.upsilon);
        r["omega"] = to_json(v.omega);
        r["self_check"] = mordukhovich_json(mordukhovich_verify(G, S, v, c.tol));
        if (th.generator) {
            std::vector<double> schedule{1e2, 1e3, 1e4};
            if (const json* sj = maybe(in, "schedule")) {
                Vec s = vec_from(*sj, "/schedule");
                schedule.assign(s.data(), s.data() + s.size());
            }
            json terms = json::array();
            bool monotone = true;
            double prev = INFINITY;
            for (double i : schedule) {
                if (!(i >= 1.0)) throw InputError("/schedule: indices must be >= 1");
                WitnessTerm w = mordukhovich_witness(G, S, p, th, i);
                monotone = monotone && w.gap < prev;
                prev = w.gap;
                terms.push_back(json{{"i", i}, {"gap", w.gap}, {"frechet_member", w.frechet_member}});
            }
            r["witness"] = json{{"terms", std::move(terms)}, {"monotone", monotone}};
        }
        return finish(std::move(r), kPass, "constructed");
    }
    if (c.check == "bilevel") {
        BilevelInstance inst = bilevel_from(need(in, "instance", ""), "/instance");
        const json& mj = need(in, "multipliers", "");
        BilevelMultipliers mult{num_from(need(mj, "mu", "/multipliers"), "/multipliers/mu"),
                                vec_from(need(mj, "lambda", "/multipliers"), "/multipliers/lambda"),
                                mat_from(need(mj, "delta", "/multipliers"), "/multipliers/delta")};
        NormalPair v{same_shape(in, "upsilon", X), same_shape(in, "omega", X)};
        Stratification S = stratification_from(maybe(in, "stratification"), G, "/stratification");
        BilevelReport b;
        try {
            b = bilevel_residual(inst, X, Yn, spec.r, mult, v, S, c.tol);
        } catch (const std::invalid_argument& ex) {
            throw InputError(std::string("/instance: ") + ex.what());
        }
        r["residuals"] = json{{"r_x", b.r_x},       {"r_X", b.r_X},
                              {"r_delta", b.r_delta}, {"r_comp", b.r_comp},
                              {"r_pair", b.r_pair}};
        r["min_lambda"] = b.min_lambda;
        r["nontrivial"] = b.nontrivial;
        r["cone_member"] = b.cone_member;
        r["cone_verdict"] = to_string(b.cone_verdict);
        r["pass"] = b.pass;
        int code = b.pass ? kPass : kFail;
        if (!b.pass && b.cone_verdict == ThetaVerdict::undetermined) code = kUndetermined;
        return finish(std::move(r), code);
    }
    throw InputError("--check must be one of tangent, frechet, mordukhovich, construct, bilevel");
}

void render(const json& j, const std::string& prefix, std::ostringstream& os) {
    if (j.is_object() && j.contains("rows") && j.contains("cols") && j.contains("data")) {
        os << prefix << ": [" << j["rows"] << " x " << j["cols"] << " matrix]\n";
        return;
    }
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            render(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), os);
        return;
    }
    if (j.is_array() && (j.size() > 8 || (!j.empty() && j[0].is_structured()))) {
        if (!j.empty() && j[0].is_object() && j.size() <= 16) {
            for (std::size_t i = 0; i < j.size(); ++i) render(j[i], prefix + "[" + std::to_string(i) + "]", os);
        } else {
            os << prefix << ": [" << j.size() << " entries]\n";
        }
        return;
    }
    os << prefix << ": " << j.dump() << "\n";
}

}  // namespace

CommandResult run_command(const RunConfig& c) {
    if (c.rank_tol <= 0 || c.tol <= 0 || c.fd_tol_first <= 0 || c.fd_tol_second <= 0)
        throw InputError("tolerances must be positive");
    if (c.command == "corpus") return cmd_corpus(c);
    if (c.input.empty()) throw InputError("--input is required");
    if (c.command == "tangent") return cmd_tangent(c);
    if (c.command == "derivative") return cmd_derivative(c);
    if (c.command == "stationarity") return cmd_stationarity(c);
    if (c.command == "versoc") return cmd_versoc(c);
    if (c.command == "param") return cmd_param(c);
    if (c.command == "graphcone") return cmd_graphcone(c);
    throw InputError("unknown command " + c.command);
}

std::string render_text(const json& report) {
    std::ostringstream os;
    render(report, "", os);
    return os.str();
}

}  // namespace varigeo::cli
