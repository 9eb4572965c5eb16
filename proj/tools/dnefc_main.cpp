// dnefc: synthetic connectome generation, neuroevolution training, evaluation
// and occlusion saliency from the command line.

#include <iostream>

#include <CLI11.hpp>

#include "dnefc/errors.hpp"
#include "dnefc/harness.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kIoError = 3, kInternalError = 4 };

template <class T>
void override_if_set(const CLI::Option* opt, T& target, const T& value) {
    if (opt->count() > 0) target = value;
}

} // namespace

int main(int argc, char** argv) {
    using namespace dnefc;
    CLI::App app{"Deep neuroevolution of CNNs on functional-connectivity matrices"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration; flags override its values")
        ->check(CLI::ExistingFile);

    // Flag storage; applied over the config file only when given.
    RunConfig flags;
    std::size_t threads = 0;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
    auto* o_out_s = synth->add_option("-o,--out", flags.output_dir, "Output dataset directory");
    auto* o_rois = synth->add_option("--n-rois", flags.synth.n_rois, "Matrix size");
    auto* o_ntrain = synth->add_option("--n-train", flags.synth.n_per_class_train, "Training matrices per class");
    auto* o_ntest = synth->add_option("--n-test", flags.synth.n_per_class_test, "Test matrices per class");
    auto* o_comm = synth->add_option("--communities", flags.synth.community_count, "Planted communities");
    auto* o_sep = synth->add_option("--separability", flags.synth.separability, "Fraction of marker ROIs in [0, 1]");
    auto* o_noise = synth->add_option("--noise", flags.synth.noise_sigma, "Gaussian noise standard deviation");
    auto* o_sseed = synth->add_option("--seed", flags.synth.seed, "Generator seed");
    auto* o_force_s = synth->add_flag("--force", flags.force, "Overwrite a non-empty output directory");

    auto* trn = app.add_subcommand("train", "Evolve a network on a dataset directory");
    auto* o_data = trn->add_option("-d,--dataset", flags.dataset_dir, "Dataset directory (with manifest.json)");
    auto* o_out_t = trn->add_option("-o,--out", flags.output_dir, "Run output directory");
    auto* o_arch = trn->add_option("--arch", flags.arch, "default or compact")->check(CLI::IsMember({"default", "compact"}));
    auto* o_spec = trn->add_option("--spec", flags.spec_path, "Network spec JSON (overrides --arch)");
    auto* o_sigma = trn->add_option("--sigma", flags.train.sigma, "Perturbation standard deviation");
    auto* o_eps = trn->add_option("--episodes", flags.train.episodes_per_generation, "Children per generation (even)");
    auto* o_elite = trn->add_option("--elite-fraction", flags.train.elite_fraction, "Share of children averaged");
    auto* o_maxgen = trn->add_option("--max-generations", flags.train.max_generations, "Generation limit");
    auto* o_mseed = trn->add_option("--seed", flags.train.master_seed, "Master seed");
    auto* o_pat = trn->add_option("--patience", flags.train.early_stop_patience,
                                  "Stop after this many perfect generations (0 disables)");
    auto* o_thr = trn->add_option("-j,--threads", threads, "Worker threads (0 = all cores)");
    auto* o_every = trn->add_option("--checkpoint-every", flags.checkpoint_every, "Checkpoint cadence in generations");
    bool no_plots = false;
    auto* o_noplots = trn->add_flag("--no-plots", no_plots, "Skip SVG accuracy plots");
    auto* o_force_t = trn->add_flag("--force", flags.force, "Overwrite a non-empty output directory");
    trn->add_flag("--resume", flags.resume, "Continue from <out>/checkpoint.dnec");

    auto* ev = app.add_subcommand("eval", "Report accuracy of a checkpoint on a dataset");
    std::string eval_ckpt, eval_data, eval_split = "test";
    ev->add_option("checkpoint", eval_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
    ev->add_option("dataset", eval_data, "Dataset directory")->required();
    ev->add_option("--split", eval_split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));

    auto* sal = app.add_subcommand("saliency", "Occlusion saliency map for one matrix");
    std::string sal_ckpt, sal_matrix, sal_out = ".", sal_target = "predicted";
    OcclusionConfig occ;
    std::size_t sal_threads = 0;
    sal->add_option("checkpoint", sal_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
    sal->add_option("matrix", sal_matrix, "Matrix CSV file")->required()->check(CLI::ExistingFile);
    sal->add_option("-o,--out", sal_out, "Output directory");
    sal->add_option("--patch", occ.patch_size, "Occlusion patch size");
    sal->add_option("--stride", occ.stride, "Patch stride");
    sal->add_option("--baseline", occ.baseline, "Replacement value for occluded cells");
    sal->add_option("--target", sal_target, "0, 1 or predicted")->check(CLI::IsMember({"0", "1", "predicted"}));
    sal->add_option("-j,--threads", sal_threads, "Worker threads (0 = all cores)");

    auto* ins = app.add_subcommand("inspect", "Describe a checkpoint, genome, spec, dataset or metrics file");
    std::string ins_path, ins_spec;
    ins->add_option("path", ins_path, "File or directory")->required();
    ins->add_option("--spec", ins_spec, "Network spec JSON (for genome files)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        cfg.force = flags.force;
        cfg.resume = flags.resume;
        if (synth->parsed()) {
            override_if_set(o_out_s, cfg.output_dir, flags.output_dir);
            override_if_set(o_rois, cfg.synth.n_rois, flags.synth.n_rois);
            override_if_set(o_ntrain, cfg.synth.n_per_class_train, flags.synth.n_per_class_train);
            override_if_set(o_ntest, cfg.synth.n_per_class_test, flags.synth.n_per_class_test);
            override_if_set(o_comm, cfg.synth.community_count, flags.synth.community_count);
            override_if_set(o_sep, cfg.synth.separability, flags.synth.separability);
            override_if_set(o_noise, cfg.synth.noise_sigma, flags.synth.noise_sigma);
            override_if_set(o_sseed, cfg.synth.seed, flags.synth.seed);
            (void)o_force_s;
            cmd_synth(cfg, std::cout);
        } else if (trn->parsed()) {
            override_if_set(o_data, cfg.dataset_dir, flags.dataset_dir);
            override_if_set(o_out_t, cfg.output_dir, flags.output_dir);
            override_if_set(o_arch, cfg.arch, flags.arch);
            override_if_set(o_spec, cfg.spec_path, flags.spec_path);
            override_if_set(o_sigma, cfg.train.sigma, flags.train.sigma);
            override_if_set(o_eps, cfg.train.episodes_per_generation, flags.train.episodes_per_generation);
            override_if_set(o_elite, cfg.train.elite_fraction, flags.train.elite_fraction);
            override_if_set(o_maxgen, cfg.train.max_generations, flags.train.max_generations);
            override_if_set(o_mseed, cfg.train.master_seed, flags.train.master_seed);
            override_if_set(o_pat, cfg.train.early_stop_patience, flags.train.early_stop_patience);
            override_if_set(o_thr, cfg.threads, threads);
            override_if_set(o_every, cfg.checkpoint_every, flags.checkpoint_every);
            if (o_noplots->count() > 0) cfg.emit_plots = false;
            (void)o_force_t;
            cmd_train(cfg, std::cout);
        } else if (ev->parsed()) {
            cmd_eval(eval_ckpt, eval_data, eval_split, std::cout);
        } else if (sal->parsed()) {
            if (sal_target != "predicted") occ.target = label_from_index(std::stoll(sal_target));
            const std::size_t t = sal_threads == 0 ? cfg.resolved_threads() : sal_threads;
            cmd_saliency(sal_ckpt, sal_matrix, occ, sal_out, t, std::cout);
        } else if (ins->parsed()) {
            cmd_inspect(ins_path, ins_spec, std::cout);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kOk;
}
