#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "equistab/commands.hpp"
#include "equistab/error.hpp"

namespace {

using equistab::CommandFlags;
using equistab::CommandResult;

void write_file(const std::string &path, const std::string &data)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    out << data;
}

// Primary artifact goes to --out when given, otherwise to stdout with the
// summary moved to stderr so stdout stays machine-readable.
int emit(const CommandResult &r, const std::string &artifact, const std::string &out_path)
{
    if (!out_path.empty()) {
        write_file(out_path, artifact);
        std::cout << r.text;
    } else {
        std::cout << artifact;
        std::cerr << r.text;
    }
    return r.exit_code;
}

void add_common(CLI::App *sub, CommandFlags &f, std::string &model, std::string &out)
{
    sub->add_option("model", model, "model JSON file")->required();
    sub->add_option("--out", out, "output file");
    sub->add_option("--seed", f.seed, "random seed");
}

void add_dynamics(CLI::App *sub, CommandFlags &f, std::string &point)
{
    sub->add_option("--point", point, "named point from the model (default: first)");
    sub->add_option("--step", f.step, "integrator step");
    sub->add_option("--horizon", f.horizon, "integration horizon");
}

void add_probe(CLI::App *sub, CommandFlags &f)
{
    sub->add_option("--eps", f.eps, "escape radius in invariant distance");
    sub->add_option("--delta", f.deltas, "initial perturbation radii")->expected(1, 16);
    sub->add_option("--samples", f.samples, "probe samples per delta");
    sub->add_option("--threads", f.threads, "probe worker threads (0: automatic)");
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"equistab: stability analysis of relative equilibria of symmetric Hamiltonian systems"};
    app.set_version_flag("--version", std::string(equistab::version_string));
    app.require_subcommand(1);

    CommandFlags f;
    std::string model, out, point, witness;

    auto *analyze = app.add_subcommand("analyze", "stability verdict and full report for one point");
    add_common(analyze, f, model, out);
    add_dynamics(analyze, f, point);
    add_probe(analyze, f);
    analyze->add_option("--tol-releq", f.tol_releq, "relative-equilibrium residual tolerance");
    analyze->add_option("--tol-nondeg", f.tol_nondeg, "absolute eigenvalue threshold for definiteness");
    analyze->add_option("--radius-hint", f.radius_hint, "initial tube radius");
    analyze->add_option("--A-override", f.A_override, "norm comparison constant used by the certificate");

    auto *simulate = app.add_subcommand("simulate", "integrate a field and write a CSV trajectory");
    add_common(simulate, f, model, out);
    add_dynamics(simulate, f, point);
    simulate->add_option("--field", f.field, "h or h_aug:xi1,xi2,...");

    auto *probe = app.add_subcommand("probe", "sampled escape test around a point");
    add_common(probe, f, model, out);
    add_dynamics(probe, f, point);
    add_probe(probe, f);
    probe->add_option("--witness", witness, "CSV file for the escaping trajectory");

    auto *verify = app.add_subcommand("verify", "sampled checks of the model's symmetry claims");
    add_common(verify, f, model, out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (analyze->parsed()) {
            const CommandResult r = equistab::cmd_analyze(model, point, f);
            return emit(r, r.report, out);
        }
        if (simulate->parsed()) {
            const CommandResult r = equistab::cmd_simulate(model, point, f);
            return emit(r, r.csv, out);
        }
        if (probe->parsed()) {
            const CommandResult r = equistab::cmd_probe(model, point, f);
            if (!witness.empty()) {
                write_file(witness, r.csv);
            }
            return emit(r, r.report, out);
        }
        const CommandResult r = equistab::cmd_verify(model, f);
        if (!out.empty()) {
            write_file(out, r.report);
        }
        std::cout << r.text;
        return r.exit_code;
    } catch (const equistab::Error &e) {
        std::cerr << "error [" << equistab::to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
