#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace varigeo::cli;

namespace {

void common_flags(CLI::App* sub, RunConfig& c, bool needs_input = true) {
    if (needs_input) sub->add_option("--input", c.input, "instance file (JSON)")->required();
    sub->add_option("--rank", c.rank, "rank bound r (defaults to the file's \"rank\")");
    sub->add_option("--tol", c.tol, "membership tolerance");
    sub->add_option("--rank-tol", c.rank_tol, "relative rank tolerance");
    sub->add_option("--fd-tol-first", c.fd_tol_first, "relative tolerance for first-order differences");
    sub->add_option("--fd-tol-second", c.fd_tol_second, "relative tolerance for second-order differences");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--out", c.out, "write the report here instead of stdout");
    sub->add_option("--format", c.format, "report format")->check(CLI::IsMember({"json", "text"}));
}

int emit(const RunConfig& c, const CommandResult& res) {
    std::string text = c.format == "text" ? render_text(res.report) : res.report.dump(2) + "\n";
    if (c.out.empty() || c.command == "corpus") {
        std::cout << text;
    } else {
        write_text_file(c.out, text);
        if (c.emit_plots_data && !res.csv.empty()) write_text_file(c.out + ".decay.csv", res.csv);
    }
    return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tangent cones, normal cones and stationarity checks for low-rank sets"};
    app.require_subcommand(1);
    RunConfig c;

    auto* tangent = app.add_subcommand("tangent", "tangent / second-order tangent membership");
    common_flags(tangent, c);
    tangent->add_option("--set", c.set, "set family")
        ->check(CLI::IsMember({"matrix", "sym", "psd", "intersection", "tensor"}));
    tangent->add_option("--order", c.order, "1 or 2");
    tangent->add_flag("--oracle", c.oracle, "cross-check against the distance-decay oracle");
    tangent->add_flag("--emit-plots-data", c.emit_plots_data, "write the decay curve CSV next to --out");

    auto* derivative = app.add_subcommand("derivative", "singular / eigenvalue directional derivatives");
    common_flags(derivative, c);
    derivative->add_option("--index", c.index, "1-based index i");
    derivative->add_option("--order", c.order, "1 or 2");

    auto* stationarity = app.add_subcommand("stationarity", "first- and second-order stationarity");
    common_flags(stationarity, c);
    stationarity->add_option("--objective", c.objective, "objective file (JSON)");
    stationarity->add_option("--order", c.order, "1 or 2");

    auto* versoc = app.add_subcommand("versoc", "clique reduction on a graph file");
    common_flags(versoc, c);
    versoc->add_option("--K", c.K, "clique size");

    auto* param = app.add_subcommand("param", "2=>2 check for lr / desing points");
    common_flags(param, c);

    auto* graphcone = app.add_subcommand("graphcone", "cones to the graph of the normal cone map");
    common_flags(graphcone, c);
    graphcone->add_option("--check", c.check, "what to run")
        ->check(CLI::IsMember({"tangent", "frechet", "mordukhovich", "construct", "bilevel"}));

    auto* corpus = app.add_subcommand("corpus", "write the deterministic instance corpus");
    common_flags(corpus, c, false);
    corpus->get_option("--out")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kInputError;
    }
    c.command = app.get_subcommands().front()->get_name();

    try {
        if (c.emit_plots_data && c.out.empty()) throw InputError("--emit-plots-data needs --out");
        return emit(c, run_command(c));
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return kInputError;
}
