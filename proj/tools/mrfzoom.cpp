#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "mrf/cli.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    int workers = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> sets;
};

void attach(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--config", a.config, "key=value config file");
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--workers", a.workers, "worker threads");
    sub->add_option("--seed", a.seed, "schedule seed")->each([&](const std::string&) {
        a.seed_set = true;
    });
    sub->add_option("--set", a.sets, "override a config key (key=value), repeatable");
}

mrf::RunConfig build(const CommonArgs& a) {
    mrf::RunConfig cfg;
    if (!a.config.empty()) mrf::apply_config_file(cfg, a.config);
    for (const auto& kv : a.sets) mrf::apply_override(cfg, kv);
    if (!a.out.empty()) cfg.out_dir = a.out;
    if (a.workers > 0) cfg.workers = a.workers;
    if (a.seed_set) cfg.seed = a.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MRF fingerprint quantification: simulation, dictionaries, and "
                 "parameter-separable zoom search"};
    app.require_subcommand(1);

    CommonArgs a_sched, a_dict, a_map, a_eval, a_slice, a_noise;
    attach(app.add_subcommand("gen-schedule", "write a pseudorandomized schedule CSV"),
           a_sched);
    attach(app.add_subcommand("gen-dict", "stream a dictionary file for a grid"), a_dict);
    attach(app.add_subcommand("ccmap", "correlation curves and maps around a target"),
           a_map);
    attach(app.add_subcommand("eval", "zoom vs brute force on random lattice targets"),
           a_eval);
    attach(app.add_subcommand("slice", "quantify a synthetic slice, with and without "
                                       "neighbor priors"),
           a_slice);
    attach(app.add_subcommand("noise", "noise robustness study with optional smoothing"),
           a_noise);

    CLI11_PARSE(app, argc, argv);
    try {
        if (app.got_subcommand("gen-schedule"))
            return mrf::cmd_gen_schedule(build(a_sched));
        if (app.got_subcommand("gen-dict")) return mrf::cmd_gen_dict(build(a_dict));
        if (app.got_subcommand("ccmap")) return mrf::cmd_ccmap(build(a_map));
        if (app.got_subcommand("eval")) return mrf::cmd_eval(build(a_eval));
        if (app.got_subcommand("slice")) return mrf::cmd_slice(build(a_slice));
        if (app.got_subcommand("noise")) return mrf::cmd_noise(build(a_noise));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
