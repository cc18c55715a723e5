#include "io.hpp"

#include <fstream>
#include <sstream>

namespace varigeo::cli {

namespace {

std::string where(const std::string& ctx) { return ctx.empty() ? "<root>" : ctx; }

// Line and column (1-based) of a byte offset.
std::pair<long, long> locate(const std::string& text, std::size_t byte) {
    long line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

Mat block_or_zero(const json& j, const std::string& key, int rows, int cols, const std::string& ctx) {
    const json* b = maybe(j, key);
    if (!b) return Mat::Zero(rows, cols);
    Mat M = mat_from(*b, ctx + "/" + key);
    if (M.rows() != rows || M.cols() != cols) {
        std::ostringstream os;
        os << where(ctx + "/" + key) << ": expected " << rows << "x" << cols << ", got " << M.rows()
           << "x" << M.cols();
        throw InputError(os.str());
    }
    return M;
}

}  // namespace

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = locate(text, e.byte == 0 ? 0 : e.byte - 1);
        std::ostringstream os;
        os << path << ":" << line << ":" << col << ": malformed JSON (" << e.what() << ")";
        throw InputError(os.str());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

const json& need(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.is_object()) throw InputError(where(ctx) + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw InputError(where(ctx) + ": missing field \"" + key + "\"");
    return *it;
}

const json* maybe(const json& j, const std::string& key) {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
}

int int_from(const json& j, const std::string& ctx) {
    if (!j.is_number_integer()) throw InputError(where(ctx) + ": expected an integer");
    return j.get<int>();
}

double num_from(const json& j, const std::string& ctx) {
    if (!j.is_number()) throw InputError(where(ctx) + ": expected a number");
    return j.get<double>();
}

std::string str_from(const json& j, const std::string& ctx) {
    if (!j.is_string()) throw InputError(where(ctx) + ": expected a string");
    return j.get<std::string>();
}

Mat mat_from(const json& j, const std::string& ctx) {
    const json* rows = &j;
    long want_r = -1, want_c = -1;
    if (j.is_object()) {
        want_r = int_from(need(j, "rows", ctx), ctx + "/rows");
        want_c = int_from(need(j, "cols", ctx), ctx + "/cols");
        rows = &need(j, "data", ctx);
    }
    if (!rows->is_array()) throw InputError(where(ctx) + ": expected a matrix");
    const long m = static_cast<long>(rows->size());
    long n = want_c >= 0 ? want_c : (m > 0 && (*rows)[0].is_array() ? static_cast<long>((*rows)[0].size()) : 0);
    if (want_r >= 0 && want_r != m) throw InputError(where(ctx) + ": rows does not match data");
    Mat M(m, n);
    for (long i = 0; i < m; ++i) {
        const json& row = (*rows)[i];
        std::string rc = ctx + "/data/" + std::to_string(i);
        if (!row.is_array() || static_cast<long>(row.size()) != n)
            throw InputError(where(rc) + ": expected a row of length " + std::to_string(n));
        for (long c = 0; c < n; ++c) M(i, c) = num_from(row[c], rc + "/" + std::to_string(c));
    }
    return M;
}

json to_json(const Mat& M) {
    json data = json::array();
    for (long i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (long c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
        data.push_back(std::move(row));
    }
    return json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

Vec vec_from(const json& j, const std::string& ctx) {
    if (!j.is_array()) throw InputError(where(ctx) + ": expected an array of numbers");
    Vec v(static_cast<long>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<long>(i)) = num_from(j[i], ctx + "/" + std::to_string(i));
    return v;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

std::vector<int> ints_from(const json& j, const std::string& ctx) {
    if (!j.is_array()) throw InputError(where(ctx) + ": expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(int_from(j[i], ctx + "/" + std::to_string(i)));
    return out;
}

Graph graph_from(const json& j) {
    int n = int_from(need(j, "n", ""), "/n");
    const json& e = need(j, "edges", "");
    if (!e.is_array()) throw InputError("/edges: expected an array");
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < e.size(); ++i) {
        std::vector<int> p = ints_from(e[i], "/edges/" + std::to_string(i));
        if (p.size() != 2) throw InputError("/edges/" + std::to_string(i) + ": expected a pair");
        edges.emplace_back(p[0], p[1]);
    }
    try {
        return Graph::make(n, std::move(edges));
    } catch (const std::invalid_argument& ex) {
        throw InputError(ex.what());
    }
}

json to_json(const Graph& G) {
    json e = json::array();
    for (auto [i, k] : G.edges) e.push_back(json::array({i, k}));
    return json{{"n", G.n}, {"edges", std::move(e)}};
}

Objective objective_from(const json& j, const std::string& ctx) {
    std::string kind = str_from(need(j, "kind", ctx), ctx + "/kind");
    if (kind == "quadratic") {
        Mat Q = mat_from(need(j, "Q", ctx), ctx + "/Q");
        Mat C = mat_from(need(j, "C", ctx), ctx + "/C");
        if (Q.rows() != C.size() || Q.cols() != C.size())
            throw InputError(where(ctx) + ": Q must be (mn) x (mn) for C of size m x n");
        if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff()))
            throw InputError(where(ctx + "/Q") + ": not symmetric");
        return make_quadratic(Q, C);
    }
    if (kind == "least_squares") {
        Mat T = mat_from(need(j, "target", ctx), ctx + "/target");
        Mat mask;
        if (const json* mk = maybe(j, "mask")) {
            mask = mat_from(*mk, ctx + "/mask");
            if (mask.rows() != T.rows() || mask.cols() != T.cols())
                throw InputError(where(ctx + "/mask") + ": shape differs from target");
        }
        return make_least_squares(T, mask);
    }
    if (kind == "linear") return make_linear(mat_from(need(j, "C", ctx), ctx + "/C"));
    throw InputError(where(ctx + "/kind") + ": unknown objective kind \"" + kind + "\"");
}

json objective_json(const Mat& Q, const Mat& C) {
    return json{{"kind", "quadratic"}, {"Q", to_json(Q)}, {"C", to_json(C)}};
}

ConstraintH constraint_from(const json& j, const std::string& ctx) {
    std::string kind = str_from(need(j, "kind", ctx), ctx + "/kind");
    ConstraintH::Kind k;
    try {
        k = constraint_kind_from_string(kind);
    } catch (const std::invalid_argument&) {
        throw InputError(where(ctx + "/kind") + ": unknown constraint kind \"" + kind + "\"");
    }
    switch (k) {
    case ConstraintH::Kind::ambient: return ConstraintH::ambient();
    case ConstraintH::Kind::sphere: return ConstraintH::sphere();
    case ConstraintH::Kind::oblique: return ConstraintH::oblique();
    case ConstraintH::Kind::hyperbolic: return ConstraintH::hyperbolic();
    case ConstraintH::Kind::affine: break;
    }
    const json& A = need(j, "A", ctx);
    if (!A.is_array()) throw InputError(where(ctx + "/A") + ": expected an array of matrices");
    std::vector<Mat> As;
    for (std::size_t i = 0; i < A.size(); ++i) As.push_back(mat_from(A[i], ctx + "/A/" + std::to_string(i)));
    Vec b = vec_from(need(j, "b", ctx), ctx + "/b");
    if (b.size() != static_cast<long>(As.size())) throw InputError(where(ctx) + ": A and b lengths differ");
    try {
        return ConstraintH::affine(std::move(As), std::move(b));
    } catch (const std::invalid_argument& ex) {
        throw InputError(where(ctx) + ": " + ex.what());
    }
}

json to_json(const ConstraintH& H) {
    json j{{"kind", to_string(H.kind)}};
    if (H.kind == ConstraintH::Kind::affine) {
        json A = json::array();
        for (const Mat& M : H.A) A.push_back(to_json(M));
        j["A"] = std::move(A);
        j["b"] = vec_json(H.b);
    }
    return j;
}

Tensor tensor_from(const json& j, const std::string& ctx) {
    Tensor T{ints_from(need(j, "dims", ctx), ctx + "/dims"), vec_from(need(j, "data", ctx), ctx + "/data")};
    try {
        check_tensor(T);
    } catch (const std::invalid_argument& ex) {
        throw InputError(where(ctx) + ": " + ex.what());
    }
    return T;
}

json to_json(const Tensor& T) { return json{{"dims", T.dims}, {"data", vec_json(T.data)}}; }

DimensionTree tree_from(const json& j, const std::vector<int>& dims, const std::string& ctx) {
    std::vector<int> ranks = ints_from(need(j, "ranks", ctx), ctx + "/ranks");
    try {
        if (const json* p = maybe(j, "preset")) {
            std::string preset = str_from(*p, ctx + "/preset");
            if (preset == "tucker") return DimensionTree::tucker(dims, ranks);
            if (preset == "tt") return DimensionTree::tt(dims, ranks);
            throw InputError(where(ctx + "/preset") + ": unknown preset \"" + preset + "\"");
        }
        const json& nodes = need(j, "nodes", ctx);
        if (!nodes.is_array()) throw InputError(where(ctx + "/nodes") + ": expected an array");
        std::vector<std::vector<int>> modes;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            modes.push_back(ints_from(nodes[i], ctx + "/nodes/" + std::to_string(i)));
        return DimensionTree::custom(dims, modes, ranks);
    } catch (const std::invalid_argument& ex) {
        throw InputError(where(ctx) + ": " + ex.what());
    }
}

json tree_json(const std::string& preset, const std::vector<int>& ranks) {
    return json{{"preset", preset}, {"ranks", ranks}};
}

LiftedPoint lifted_from(const json& j) {
    std::string kind = str_from(need(j, "kind", ""), "/kind");
    try {
        if (lifted_kind_from_string(kind) == LiftedPoint::Kind::lr)
            return LiftedPoint::lr(mat_from(need(j, "L", ""), "/L"), mat_from(need(j, "R", ""), "/R"));
        return LiftedPoint::desing(mat_from(need(j, "X", ""), "/X"), mat_from(need(j, "Q", ""), "/Q"));
    } catch (const std::invalid_argument& ex) {
        throw InputError(ex.what());
    }
}

json to_json(const LiftedPoint& Y) {
    if (Y.kind == LiftedPoint::Kind::lr) return json{{"kind", "lr"}, {"L", to_json(Y.L)}, {"R", to_json(Y.R)}};
    return json{{"kind", "desing"}, {"X", to_json(Y.X)}, {"Q", to_json(Y.Q)}};
}

Stratification stratification_from(const json* j, const GraphPoint& G, const std::string& ctx) {
    if (!j) return degenerate_stratification(G);
    int rl = int_from(need(*j, "rl", ctx), ctx + "/rl");
    int rh = int_from(need(*j, "rh", ctx), ctx + "/rh");
    try {
        Stratification S = make_stratification(G, rl, rh);
        const int m = G.m(), n = G.n();
        const int d = m - G.k + rh - rl, e = n - G.k + rh - rl;
        auto take = [&](const char* key, Mat& slot, int rows, int cols) {
            if (maybe(*j, key)) slot = block_or_zero(*j, key, rows, cols, ctx);
        };
        take("Ut", S.Ut, m, rl - G.s);
        take("Ub", S.Ub, m, d);
        take("UYt", S.UYt, m, G.ell - rh);
        take("Vt", S.Vt, n, rl - G.s);
        take("Vb", S.Vb, n, e);
        take("VYt", S.VYt, n, G.ell - rh);
        check_stratification(G, S);
        return S;
    } catch (const std::invalid_argument& ex) {
        throw InputError(where(ctx) + ": " + ex.what());
    }
}

json to_json(const Stratification& S) {
    return json{{"rl", S.rl}, {"rh", S.rh}, {"Ut", to_json(S.Ut)}, {"Ub", to_json(S.Ub)}, {"UYt", to_json(S.UYt)},
                {"Vt", to_json(S.Vt)}, {"Vb", to_json(S.Vb)}, {"VYt", to_json(S.VYt)}};
}

MordukhovichParams mordukhovich_params_from(const json& j, const GraphPoint& G, const Stratification& S,
                                            const std::string& ctx) {
    MordukhovichParams p = zero_mordukhovich_params(G, S);
    auto take = [&](const char* key, Mat& slot) {
        slot = block_or_zero(j, key, static_cast<int>(slot.rows()), static_cast<int>(slot.cols()), ctx);
    };
    take("A", p.A);
    take("B", p.B);
    take("C", p.C);
    take("G1", p.G1);
    take("G2", p.G2);
    take("E1v", p.E1v);
    take("E1w", p.E1w);
    take("E2v", p.E2v);
    take("E2w", p.E2w);
    take("F1v", p.F1v);
    take("F1w", p.F1w);
    take("F2v", p.F2v);
    take("F2w", p.F2w);
    take("Z1", p.Z1);
    take("Z2", p.Z2);
    take("Z3", p.Z3);
    take("Z4", p.Z4);
    take("Zhat", p.Zhat);
    return p;
}

json to_json(const MordukhovichParams& p) {
    return json{{"A", to_json(p.A)},     {"B", to_json(p.B)},     {"C", to_json(p.C)},
                {"G1", to_json(p.G1)},   {"G2", to_json(p.G2)},   {"E1v", to_json(p.E1v)},
                {"E1w", to_json(p.E1w)}, {"E2v", to_json(p.E2v)}, {"E2w", to_json(p.E2w)},
                {"F1v", to_json(p.F1v)}, {"F1w", to_json(p.F1w)}, {"F2v", to_json(p.F2v)},
                {"F2w", to_json(p.F2w)}, {"Z1", to_json(p.Z1)},   {"Z2", to_json(p.Z2)},
                {"Z3", to_json(p.Z3)},   {"Z4", to_json(p.Z4)},   {"Zhat", to_json(p.Zhat)}};
}

FrechetParams frechet_params_from(const json& j, const std::string& ctx) {
    FrechetParams p;
    p.A = mat_from(need(j, "A", ctx), ctx + "/A");
    p.B1 = mat_from(need(j, "B1", ctx), ctx + "/B1");
    p.B2 = mat_from(need(j, "B2", ctx), ctx + "/B2");
    p.C1 = mat_from(need(j, "C1", ctx), ctx + "/C1");
    p.C2 = mat_from(need(j, "C2", ctx), ctx + "/C2");
    p.Z = mat_from(need(j, "Z", ctx), ctx + "/Z");
    p.Zhat = mat_from(need(j, "Zhat", ctx), ctx + "/Zhat");
    return p;
}

json to_json(const FrechetParams& p) {
    return json{{"A", to_json(p.A)},   {"B1", to_json(p.B1)}, {"B2", to_json(p.B2)},    {"C1", to_json(p.C1)},
                {"C2", to_json(p.C2)}, {"Z", to_json(p.Z)},   {"Zhat", to_json(p.Zhat)}};
}

ThetaGenerator generator_from(const json& j, const std::string& ctx) {
    ThetaGenerator g{vec_from(need(j, "a", ctx), ctx + "/a"), vec_from(need(j, "p", ctx), ctx + "/p"),
                     vec_from(need(j, "b", ctx), ctx + "/b"), vec_from(need(j, "q", ctx), ctx + "/q")};
    try {
        check_generator(g);
    } catch (const std::invalid_argument& ex) {
        throw InputError(where(ctx) + ": " + ex.what());
    }
    return g;
}

json to_json(const ThetaGenerator& g) {
    return json{{"a", vec_json(g.a)}, {"p", vec_json(g.p)}, {"b", vec_json(g.b)}, {"q", vec_json(g.q)}};
}

ThetaCandidate theta_from(const json& j, const std::string& ctx) {
    ThetaCandidate t;
    if (const json* g = maybe(j, "generator")) {
        t.generator = generator_from(*g, ctx + "/generator");
        t.D = theta_limit(*t.generator);
    }
    if (const json* D = maybe(j, "D")) {
        Mat given = mat_from(*D, ctx + "/D");
        if (t.generator && (given.rows() != t.D.rows() || given.cols() != t.D.cols() ||
                            (given.size() > 0 && (given - t.D).cwiseAbs().maxCoeff() > 1e-9)))
            throw InputError(where(ctx) + ": D differs from the generator limit");
        t.D = given;
    }
    return t;
}

BilevelInstance bilevel_from(const json& j, const std::string& ctx) {
    BilevelInstance b;
    b.grad_x_L = vec_from(need(j, "grad_x_L", ctx), ctx + "/grad_x_L");
    b.grad_X_L = mat_from(need(j, "grad_X_L", ctx), ctx + "/grad_X_L");
    b.G = vec_from(need(j, "G", ctx), ctx + "/G");
    b.grad_G = mat_from(need(j, "grad_G", ctx), ctx + "/grad_G");
    b.Jx_gradxF = mat_from(need(j, "Jx_gradxF", ctx), ctx + "/Jx_gradxF");
    b.JX_gradXF = mat_from(need(j, "JX_gradXF", ctx), ctx + "/JX_gradXF");
    b.grad_X_F = mat_from(need(j, "grad_X_F", ctx), ctx + "/grad_X_F");
    b.q = static_cast<int>(b.grad_x_L.size());
    b.p = static_cast<int>(b.G.size());
    b.m = static_cast<int>(b.grad_X_L.rows());
    b.n = static_cast<int>(b.grad_X_L.cols());
    return b;
}

json to_json(const BilevelInstance& b) {
    return json{{"grad_x_L", vec_json(b.grad_x_L)}, {"grad_X_L", to_json(b.grad_X_L)},
                {"G", vec_json(b.G)},               {"grad_G", to_json(b.grad_G)},
                {"Jx_gradxF", to_json(b.Jx_gradxF)}, {"JX_gradXF", to_json(b.JX_gradXF)},
                {"grad_X_F", to_json(b.grad_X_F)}};
}

json violations_json(const std::vector<ConeViolation>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(json{{"name", x.name}, {"magnitude", x.magnitude}});
    return a;
}

}  // namespace varigeo::cli
