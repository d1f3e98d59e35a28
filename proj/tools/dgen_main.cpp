// Config-driven command-line harness: forward-process simulation, training,
// sampling, degradation/restoration runs, and novelty/realism metrics, each
// emitting CSV artifacts plus a resolved-config copy that replays to
// bit-identical outputs.

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dgen/cold.hpp"
#include "dgen/datasets.hpp"
#include "dgen/denoiser.hpp"
#include "dgen/errors.hpp"
#include "dgen/forward.hpp"
#include "dgen/latent.hpp"
#include "dgen/novelty.hpp"
#include "dgen/rng.hpp"
#include "dgen/sampler.hpp"
#include "dgen/schedule.hpp"
#include "dgen/textio.hpp"
#include "dgen/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dgen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitArtifact = 4;

// Configuration problems carry their own type so the top-level handler can
// map them to the config exit code even when raised deep inside a handler.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] void fail_config(const std::string& msg) { throw config_error(msg); }

std::uint64_t env_default_seed() {
    const char* raw = std::getenv("DGEN_SEED");
    if (raw == nullptr || *raw == '\0') return 0;
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(raw, &end, 10);
    if (errno != 0 || end == nullptr || *end != '\0')
        fail_config("DGEN_SEED must be an unsigned integer, got '" + std::string(raw) + "'");
    return static_cast<std::uint64_t>(v);
}

json load_config_file(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        fail_config("cannot read config '" + path + "': " + e.what());
    }
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail_config("config '" + path + "' is not valid JSON: " + e.what());
    }
}

void check_keys(const json& j, const std::string& context,
                const std::vector<std::string>& allowed) {
    if (!j.is_object()) fail_config(context + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const std::string& k : allowed) ok = ok || it.key() == k;
        if (!ok) fail_config("unknown config field '" + it.key() + "' in " + context);
    }
}

template <typename T>
T field_or(const json& j, const std::string& key, const T& fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail_config("config field '" + key + "' has the wrong type");
    }
}

std::string absolute_path(const std::string& p) {
    return fs::absolute(fs::path(p)).lexically_normal().string();
}

void write_output(const std::string& out_dir, const std::string& name,
                  const std::string& content) {
    atomic_write_file((fs::path(out_dir) / name).string(), content);
}

std::uint64_t resolve_seed(const json& in) {
    if (in.contains("seed") && !in.at("seed").is_null()) {
        if (!in.at("seed").is_number_unsigned() && !in.at("seed").is_number_integer())
            fail_config("config field 'seed' must be an unsigned integer");
        return in.at("seed").get<std::uint64_t>();
    }
    return env_default_seed();
}

void check_command_tag(const json& in, const std::string& command) {
    if (in.contains("command") && in.at("command").get<std::string>() != command)
        fail_config("config was resolved for command '" +
                    in.at("command").get<std::string>() + "', not '" + command + "'");
}

// ---------------------------------------------------------------------------
// Shared resolvers
// ---------------------------------------------------------------------------

json resolve_schedule(const json& in) {
    json out;
    if (in.contains("betas")) {
        check_keys(in, "schedule", {"betas", "sigma_mode"});
        out["betas"] = in.at("betas").get<std::vector<double>>();
    } else {
        check_keys(in, "schedule", {"type", "steps", "beta_start", "beta_end", "sigma_mode"});
        std::string type = field_or<std::string>(in, "type", "linear");
        if (type != "linear") fail_config("schedule.type: only 'linear' is supported");
        out["type"] = type;
        out["steps"] = field_or<int>(in, "steps", 1000);
        out["beta_start"] = field_or<double>(in, "beta_start", 0.0004);
        out["beta_end"] = field_or<double>(in, "beta_end", 0.06);
    }
    out["sigma_mode"] = field_or<std::string>(in, "sigma_mode", "posterior_beta");
    return out;
}

Schedule schedule_from_json(const json& resolved) {
    SigmaMode mode = sigma_mode_from_string(resolved.at("sigma_mode").get<std::string>());
    if (resolved.contains("betas"))
        return Schedule::from_betas(resolved.at("betas").get<std::vector<double>>(), mode);
    return make_linear_schedule(resolved.at("steps").get<int>(),
                                resolved.at("beta_start").get<double>(),
                                resolved.at("beta_end").get<double>(), mode);
}

json resolve_mixture(const json& in) {
    check_keys(in, "dataset",
               {"kind", "n_train", "n_eval", "means", "stds", "weights", "clamp", "labeled"});
    json out;
    out["kind"] = "gaussian_mixture";
    out["n_train"] = field_or<std::size_t>(in, "n_train", 2048);
    out["n_eval"] = field_or<std::size_t>(in, "n_eval", 256);
    out["means"] = field_or<std::vector<double>>(in, "means", {-0.7, 0.7});
    out["stds"] = field_or<std::vector<double>>(in, "stds", {0.12, 0.12});
    out["weights"] = field_or<std::vector<double>>(
        in, "weights", std::vector<double>(out["means"].size(), 1.0));
    out["clamp"] = field_or<std::vector<double>>(in, "clamp", {-1.0, 1.0});
    out["labeled"] = field_or<bool>(in, "labeled", false);
    if (out["clamp"].size() != 2) fail_config("dataset.clamp must be [lo, hi]");
    return out;
}

json resolve_dataset(const json& in) {
    std::string kind = field_or<std::string>(in, "kind", "gaussian_mixture");
    if (kind == "gaussian_mixture") return resolve_mixture(in);
    if (kind == "bump") {
        check_keys(in, "dataset", {"kind", "n_train", "n_eval", "dim"});
        json out;
        out["kind"] = "bump";
        out["n_train"] = field_or<std::size_t>(in, "n_train", 64);
        out["n_eval"] = field_or<std::size_t>(in, "n_eval", 16);
        out["dim"] = field_or<std::size_t>(in, "dim", 16);
        return out;
    }
    fail_config("dataset.kind must be 'gaussian_mixture' or 'bump'");
}

MixtureSpec mixture_from_json(const json& d) {
    MixtureSpec spec;
    spec.means = d.at("means").get<std::vector<double>>();
    spec.stds = d.at("stds").get<std::vector<double>>();
    spec.weights = d.at("weights").get<std::vector<double>>();
    spec.clamp_lo = d.at("clamp")[0].get<double>();
    spec.clamp_hi = d.at("clamp")[1].get<double>();
    try {
        spec.validate();
    } catch (const std::exception& e) {
        fail_config(std::string("dataset: ") + e.what());
    }
    return spec;
}

struct BuiltData {
    std::vector<DataPoint> train;
    std::vector<DataPoint> eval;
    std::size_t dim = 1;
};

BuiltData build_dataset(const json& d, std::uint64_t seed) {
    BuiltData out;
    Rng rng(seed, kDataStream);
    std::size_t n_train = d.at("n_train").get<std::size_t>();
    std::size_t n_eval = d.at("n_eval").get<std::size_t>();
    if (n_train == 0) fail_config("dataset.n_train must be positive");
    if (d.at("kind") == "gaussian_mixture") {
        MixtureSpec spec = mixture_from_json(d);
        bool labeled = d.at("labeled").get<bool>();
        out.train = make_mixture_dataset(n_train, spec, labeled, rng);
        out.eval = make_mixture_dataset(n_eval, spec, labeled, rng);
        out.dim = 1;
        return out;
    }
    std::size_t dim = d.at("dim").get<std::size_t>();
    if (dim < 2) fail_config("dataset.dim must be >= 2 for bump data");
    for (Tensor& x : make_bump_dataset(n_train, dim, rng)) out.train.push_back({std::move(x), {}});
    for (Tensor& x : make_bump_dataset(n_eval, dim, rng)) out.eval.push_back({std::move(x), {}});
    out.dim = dim;
    return out;
}

json resolve_net(const json& in) {
    check_keys(in, "net", {"hidden", "time_dim", "time_mode", "cond_dim"});
    json out;
    out["hidden"] = field_or<std::vector<std::size_t>>(in, "hidden", {64, 64, 64});
    out["time_dim"] = field_or<std::size_t>(in, "time_dim", 8);
    out["time_mode"] = field_or<std::string>(in, "time_mode", "sinusoidal");
    out["cond_dim"] = field_or<std::size_t>(in, "cond_dim", 0);
    return out;
}

DenoiserInit net_from_json(const json& n, std::size_t data_dim, int max_step,
                           std::size_t cond_vocab) {
    DenoiserInit init;
    init.data_dim = data_dim;
    init.hidden_sizes = n.at("hidden").get<std::vector<std::size_t>>();
    init.time_dim = n.at("time_dim").get<std::size_t>();
    init.time_mode = time_mode_from_string(n.at("time_mode").get<std::string>());
    init.max_step = max_step;
    init.cond_vocab = cond_vocab;
    init.cond_dim = n.at("cond_dim").get<std::size_t>();
    return init;
}

json resolve_train(const json& in) {
    check_keys(in, "train",
               {"steps", "batch_size", "learning_rate", "optimizer", "weighting",
                "eval_every", "eval_n_mc"});
    json out;
    std::uint64_t steps = field_or<std::uint64_t>(in, "steps", 2000);
    out["steps"] = steps;
    out["batch_size"] = field_or<int>(in, "batch_size", 64);
    out["learning_rate"] = field_or<double>(in, "learning_rate", 1e-3);
    out["optimizer"] = field_or<std::string>(in, "optimizer", "adaptive_moments");
    out["weighting"] = field_or<std::string>(in, "weighting", "unweighted");
    out["eval_every"] =
        field_or<std::uint64_t>(in, "eval_every", steps < 500 ? steps : 500);
    out["eval_n_mc"] = field_or<int>(in, "eval_n_mc", 4);
    return out;
}

TrainConfig train_from_json(const json& t, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.steps = t.at("steps").get<std::uint64_t>();
    cfg.batch_size = t.at("batch_size").get<int>();
    cfg.learning_rate = t.at("learning_rate").get<double>();
    cfg.optimizer = optimizer_from_string(t.at("optimizer").get<std::string>());
    cfg.weighting = weighting_from_string(t.at("weighting").get<std::string>());
    cfg.seed = seed;
    cfg.eval_every = t.at("eval_every").get<std::uint64_t>();
    cfg.eval_n_mc = t.at("eval_n_mc").get<int>();
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        fail_config(std::string("train: ") + e.what());
    }
    return cfg;
}

void write_resolved(const std::string& out_dir, const json& resolved) {
    write_output(out_dir, "resolved_config.json", resolved.dump(2) + "\n");
}

CheckpointSink checkpoint_sink(const std::string& out_dir, std::uint64_t fingerprint) {
    return [out_dir, fingerprint](std::uint64_t step, const DenoiserParams& p) {
        save_checkpoint((fs::path(out_dir) / checkpoint_filename(step)).string(),
                        Checkpoint{p, fingerprint, step});
    };
}

// ---------------------------------------------------------------------------
// forward-sim
// ---------------------------------------------------------------------------

json resolve_forward_sim(const json& in) {
    check_keys(in, "forward-sim config",
               {"command", "seed", "schedule", "dataset", "n_trajectories", "record_stride",
                "histogram_times", "histogram_bins", "histogram_range"});
    check_command_tag(in, "forward-sim");
    json out;
    out["command"] = "forward-sim";
    out["seed"] = resolve_seed(in);
    out["schedule"] = resolve_schedule(in.contains("schedule") ? in.at("schedule") : json::object());
    json ds = in.contains("dataset") ? in.at("dataset") : json::object();
    if (field_or<std::string>(ds, "kind", "gaussian_mixture") != "gaussian_mixture")
        fail_config("forward-sim supports only gaussian_mixture datasets");
    ds.erase("n_train");
    ds.erase("n_eval");
    json mix = resolve_mixture(ds);
    mix.erase("n_train");
    mix.erase("n_eval");
    mix.erase("labeled");
    out["dataset"] = mix;
    out["n_trajectories"] = field_or<int>(in, "n_trajectories", 2000);
    out["record_stride"] = field_or<int>(in, "record_stride", 50);
    out["histogram_bins"] = field_or<int>(in, "histogram_bins", 60);
    out["histogram_range"] = field_or<std::vector<double>>(in, "histogram_range", {-4.0, 4.0});
    if (out["histogram_range"].size() != 2) fail_config("histogram_range must be [lo, hi]");

    int T = out["schedule"].contains("steps")
                ? out["schedule"]["steps"].get<int>()
                : static_cast<int>(out["schedule"]["betas"].size());
    std::vector<int> default_times{0, T / 4, T / 2, T};
    std::vector<int> times = field_or<std::vector<int>>(in, "histogram_times", default_times);
    for (int t : times)
        if (t < 0 || t > T) fail_config("histogram_times entries must lie in [0, T]");
    out["histogram_times"] = times;
    if (out["n_trajectories"].get<int>() < 1) fail_config("n_trajectories must be >= 1");
    if (out["record_stride"].get<int>() < 1) fail_config("record_stride must be >= 1");
    if (out["histogram_bins"].get<int>() < 1) fail_config("histogram_bins must be >= 1");
    return out;
}

int cmd_forward_sim(const json& resolved, const std::string& out_dir) {
    write_resolved(out_dir, resolved);
    std::uint64_t seed = resolved.at("seed").get<std::uint64_t>();
    Schedule s = schedule_from_json(resolved.at("schedule"));
    int T = s.steps();
    int n_traj = resolved.at("n_trajectories").get<int>();
    int stride = resolved.at("record_stride").get<int>();
    std::vector<int> times = resolved.at("histogram_times").get<std::vector<int>>();

    json mix_json = resolved.at("dataset");
    mix_json["n_train"] = 0;
    mix_json["n_eval"] = 0;
    mix_json["labeled"] = false;
    MixtureSpec spec = mixture_from_json(mix_json);
    Rng data_rng(seed, kDataStream);
    std::vector<DataPoint> starts =
        make_mixture_dataset(static_cast<std::size_t>(n_traj), spec, false, data_rng);

    std::vector<std::vector<double>> hist_values(times.size());
    std::string traj_csv = "traj_id,t,component_index,value\n";
    for (int i = 0; i < n_traj; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        Trajectory traj = simulate_trajectory(starts[static_cast<std::size_t>(i)].x, s, rng);
        for (int t = 0; t <= T; ++t) {
            bool keep = t == 0 || t == T || t % stride == 0;
            if (!keep) continue;
            const Tensor& state = traj.states[static_cast<std::size_t>(t)];
            for (std::size_t j = 0; j < state.numel(); ++j)
                traj_csv += std::to_string(i) + "," + std::to_string(t) + "," +
                            std::to_string(j) + "," + format_double(state.data[j]) + "\n";
        }
        for (std::size_t k = 0; k < times.size(); ++k)
            hist_values[k].push_back(traj.states[static_cast<std::size_t>(times[k])].data[0]);
    }
    write_output(out_dir, "trajectories.csv", traj_csv);
    double lo = resolved.at("histogram_range")[0].get<double>();
    double hi = resolved.at("histogram_range")[1].get<double>();
    int bins = resolved.at("histogram_bins").get<int>();
    for (std::size_t k = 0; k < times.size(); ++k)
        write_output(out_dir, "hist_t" + std::to_string(times[k]) + ".csv",
                     histogram_csv(hist_values[k], lo, hi, bins));
    write_output(out_dir, "schedule.csv", s.to_csv());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

json resolve_train_cmd(const json& in) {
    check_keys(in, "train config",
               {"command", "seed", "schedule", "dataset", "net", "train", "resume", "latent"});
    check_command_tag(in, "train");
    json out;
    out["command"] = "train";
    out["seed"] = resolve_seed(in);
    out["schedule"] = resolve_schedule(in.contains("schedule") ? in.at("schedule") : json::object());
    out["dataset"] = resolve_dataset(in.contains("dataset") ? in.at("dataset") : json::object());
    out["net"] = resolve_net(in.contains("net") ? in.at("net") : json::object());
    out["train"] = resolve_train(in.contains("train") ? in.at("train") : json::object());
    out["resume"] = json();
    if (in.contains("resume") && !in.at("resume").is_null())
        out["resume"] = absolute_path(in.at("resume").get<std::string>());
    out["latent"] = json();
    if (in.contains("latent") && !in.at("latent").is_null()) {
        check_keys(in.at("latent"), "latent", {"block_m"});
        json lat;
        lat["block_m"] = field_or<unsigned>(in.at("latent"), "block_m", 1);
        out["latent"] = lat;
    }

    bool labeled = out["dataset"].at("kind") == "gaussian_mixture" &&
                   out["dataset"].at("labeled").get<bool>();
    std::size_t cond_dim = out["net"].at("cond_dim").get<std::size_t>();
    if (labeled && cond_dim == 0) out["net"]["cond_dim"] = 4;
    if (!labeled && cond_dim > 0)
        fail_config("net.cond_dim > 0 requires a labeled dataset");
    if (!out["latent"].is_null() && out["dataset"].at("kind") != "bump")
        fail_config("latent training needs the multi-component bump dataset");
    return out;
}

int cmd_train(const json& resolved, const std::string& out_dir) {
    write_resolved(out_dir, resolved);
    std::uint64_t seed = resolved.at("seed").get<std::uint64_t>();
    Schedule s = schedule_from_json(resolved.at("schedule"));
    BuiltData data = build_dataset(resolved.at("dataset"), seed);
    TrainConfig cfg = train_from_json(resolved.at("train"), seed);

    bool labeled = resolved["dataset"].at("kind") == "gaussian_mixture" &&
                   resolved["dataset"].at("labeled").get<bool>();
    std::size_t cond_vocab =
        labeled ? resolved["dataset"].at("means").size() : std::size_t{0};

    std::optional<Codec> codec;
    std::size_t model_dim = data.dim;
    if (!resolved.at("latent").is_null()) {
        unsigned m = resolved["latent"].at("block_m").get<unsigned>();
        try {
            codec = make_block_codec(data.dim, m);
        } catch (const std::exception& e) {
            fail_config(std::string("latent: ") + e.what());
        }
        model_dim = codec->latent_dim();
        for (DataPoint& d : data.train) d.x = encode(*codec, d.x);
        for (DataPoint& d : data.eval) d.x = encode(*codec, d.x);
    }
    DenoiserInit net = net_from_json(resolved.at("net"), model_dim, s.steps(), cond_vocab);

    std::optional<DenoiserParams> warm;
    std::uint64_t start_step = 0;
    if (!resolved.at("resume").is_null()) {
        Checkpoint ckpt = load_checkpoint(resolved.at("resume").get<std::string>());
        if (ckpt.schedule_fingerprint != s.fingerprint())
            throw artifact_error("resume checkpoint was trained against a different schedule");
        if (ckpt.step > cfg.steps)
            fail_config("resume checkpoint is already past train.steps");
        warm = std::move(ckpt.params);
        start_step = ckpt.step;
    }

    TrainResult res = train(data.train, data.eval, s, cfg, net, std::move(warm), start_step,
                            checkpoint_sink(out_dir, s.fingerprint()));
    write_output(out_dir, "train_log.csv", res.log.to_csv());
    write_output(out_dir, "schedule.csv", s.to_csv());
    if (cond_vocab > 0) {
        ConditionVocab vocab;
        for (std::size_t k = 0; k < cond_vocab; ++k)
            vocab.names.push_back("class_" + std::to_string(k));
        write_output(out_dir, "vocab.csv", vocab_to_csv(vocab, res.params.cond_table));
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

json resolve_sample(const json& in) {
    check_keys(in, "sample config",
               {"command", "seed", "checkpoint", "schedule_csv", "n_samples", "sigma_mode",
                "record_stride", "final_decode", "cond_label"});
    check_command_tag(in, "sample");
    json out;
    out["command"] = "sample";
    out["seed"] = resolve_seed(in);
    if (!in.contains("checkpoint")) fail_config("sample config needs 'checkpoint'");
    if (!in.contains("schedule_csv")) fail_config("sample config needs 'schedule_csv'");
    out["checkpoint"] = absolute_path(in.at("checkpoint").get<std::string>());
    out["schedule_csv"] = absolute_path(in.at("schedule_csv").get<std::string>());
    out["n_samples"] = field_or<int>(in, "n_samples", 2000);
    out["sigma_mode"] = field_or<std::string>(in, "sigma_mode", "posterior_beta");
    out["record_stride"] = field_or<int>(in, "record_stride", 0);
    out["final_decode"] = field_or<std::string>(in, "final_decode", "none");
    out["cond_label"] = json();
    if (in.contains("cond_label") && !in.at("cond_label").is_null())
        out["cond_label"] = in.at("cond_label").get<int>();
    return out;
}

int cmd_sample(const json& resolved, const std::string& out_dir) {
    write_resolved(out_dir, resolved);
    Schedule s = [&] {
        try {
            return Schedule::from_csv(read_file(resolved.at("schedule_csv").get<std::string>()));
        } catch (const std::exception& e) {
            throw artifact_error("schedule table unavailable: " + std::string(e.what()));
        }
    }();
    Checkpoint ckpt = load_checkpoint(resolved.at("checkpoint").get<std::string>());
    if (ckpt.schedule_fingerprint != s.fingerprint())
        throw artifact_error("checkpoint incompatible: schedule fingerprint mismatch");
    if (ckpt.params.max_step < s.steps())
        throw artifact_error("checkpoint incompatible: trained for fewer steps than the schedule");

    SampleRunConfig cfg;
    cfg.n_samples = resolved.at("n_samples").get<int>();
    cfg.seed = resolved.at("seed").get<std::uint64_t>();
    cfg.sigma_mode = sigma_mode_from_string(resolved.at("sigma_mode").get<std::string>());
    cfg.record_stride = resolved.at("record_stride").get<int>();
    cfg.final_decode = final_decode_from_string(resolved.at("final_decode").get<std::string>());
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        fail_config(e.what());
    }

    std::optional<int> cond;
    if (!resolved.at("cond_label").is_null()) cond = resolved.at("cond_label").get<int>();
    if (ckpt.params.cond_dim > 0 && !cond.has_value())
        fail_config("checkpoint is conditioned: sample config needs 'cond_label'");
    if (ckpt.params.cond_dim == 0 && cond.has_value())
        fail_config("checkpoint is unconditioned: remove 'cond_label'");

    GeneratedSamples samples = generate(ckpt.params, s, cfg, cond);
    write_output(out_dir, "samples.csv", samples.to_csv());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// cold
// ---------------------------------------------------------------------------

json resolve_cold(const json& in) {
    check_keys(in, "cold config",
               {"command", "seed", "op", "dataset", "net", "train", "n_report"});
    check_command_tag(in, "cold");
    json out;
    out["command"] = "cold";
    out["seed"] = resolve_seed(in);
    json op_in = in.contains("op") ? in.at("op") : json::object();
    std::string kind = field_or<std::string>(op_in, "kind", "fixed_noise");
    json op;
    op["kind"] = kind;
    if (kind == "fixed_noise") {
        check_keys(op_in, "op", {"kind", "schedule"});
        json sched = op_in.contains("schedule") ? op_in.at("schedule") : json::object();
        if (!sched.contains("betas") && !sched.contains("steps"))
            sched["steps"] = 20;  // desk-scale severity default
        op["schedule"] = resolve_schedule(sched);
    } else if (kind == "blur") {
        check_keys(op_in, "op", {"kind", "max_severity", "unit_width"});
        op["max_severity"] = field_or<int>(op_in, "max_severity", 10);
        op["unit_width"] = field_or<double>(op_in, "unit_width", 0.6);
    } else {
        fail_config("op.kind must be 'fixed_noise' or 'blur'");
    }
    out["op"] = op;
    json ds = in.contains("dataset") ? in.at("dataset") : json{{"kind", "bump"}};
    out["dataset"] = resolve_dataset(ds);
    out["net"] = resolve_net(in.contains("net") ? in.at("net") : json::object());
    json tr = in.contains("train") ? in.at("train") : json::object();
    json tr_resolved = resolve_train(tr);
    if (!tr.contains("steps")) tr_resolved["steps"] = 1500;
    if (!tr.contains("eval_every"))
        tr_resolved["eval_every"] = std::min<std::uint64_t>(
            500, tr_resolved["steps"].get<std::uint64_t>());
    out["train"] = tr_resolved;
    out["n_report"] = field_or<std::size_t>(in, "n_report", 16);
    if (kind == "blur" && out["dataset"].at("kind") != "bump")
        fail_config("blur degradation needs the multi-component bump dataset");
    return out;
}

int cmd_cold(const json& resolved, const std::string& out_dir) {
    write_resolved(out_dir, resolved);
    std::uint64_t seed = resolved.at("seed").get<std::uint64_t>();
    BuiltData data = build_dataset(resolved.at("dataset"), seed);
    std::vector<Tensor> train_set, eval_set;
    for (DataPoint& d : data.train) train_set.push_back(std::move(d.x));
    for (DataPoint& d : data.eval) eval_set.push_back(std::move(d.x));

    DegradationOp op = [&] {
        if (resolved["op"].at("kind") == "fixed_noise") {
            Schedule s = schedule_from_json(resolved["op"].at("schedule"));
            Rng z_rng(seed, kPinnedNoiseStream);
            return make_fixed_noise_op(std::move(s), z_rng.normal_tensor({data.dim}));
        }
        return make_blur_op(resolved["op"].at("max_severity").get<int>(),
                            resolved["op"].at("unit_width").get<double>());
    }();

    TrainConfig cfg = train_from_json(resolved.at("train"), seed);
    DenoiserInit net = net_from_json(resolved.at("net"), data.dim, op.max_severity(), 0);
    std::uint64_t fingerprint =
        op.kind == DegradationKind::FixedNoise ? op.schedule->fingerprint() : 0;
    RestorationResult res = train_restoration(train_set, eval_set, op, cfg, net,
                                              checkpoint_sink(out_dir, fingerprint));
    write_output(out_dir, "train_log.csv", res.log.to_csv());
    write_output(out_dir, "op.json", op_to_json(op));

    std::size_t n_report = std::min(resolved.at("n_report").get<std::size_t>(),
                                    eval_set.empty() ? train_set.size() : eval_set.size());
    const std::vector<Tensor>& pool = eval_set.empty() ? train_set : eval_set;
    Restorer r = as_restorer(res.model);
    std::string report = "input_id,iterative_l1,one_step_l1\n";
    for (std::size_t i = 0; i < n_report; ++i) {
        Tensor degraded = degrade(op, pool[i], op.max_severity());
        double iter_err = l1_distance(restore_iterative(r, op, degraded), pool[i]);
        double one_err = l1_distance(restore_one_step(r, op, degraded), pool[i]);
        report += std::to_string(i) + "," + format_double(iter_err) + "," +
                  format_double(one_err) + "\n";
    }
    write_output(out_dir, "restoration_report.csv", report);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

json resolve_metrics(const json& in) {
    check_keys(in, "metrics config",
               {"command", "seed", "universe", "observers", "outputs", "class_id"});
    check_command_tag(in, "metrics");
    json out;
    out["command"] = "metrics";
    out["seed"] = resolve_seed(in);
    json uni = in.contains("universe") ? in.at("universe") : json::object();
    if (uni.contains("file")) {
        check_keys(uni, "universe", {"file"});
        out["universe"] = json{{"file", absolute_path(uni.at("file").get<std::string>())}};
    } else {
        check_keys(uni, "universe", {"kind", "rows", "cols", "class_rule"});
        json u;
        u["kind"] = field_or<std::string>(uni, "kind", "binary");
        if (u["kind"] != "binary") fail_config("universe.kind must be 'binary'");
        u["rows"] = field_or<std::size_t>(uni, "rows", 3);
        u["cols"] = field_or<std::size_t>(uni, "cols", 3);
        u["class_rule"] = field_or<std::string>(uni, "class_rule", "majority_bits");
        if (u["class_rule"] != "majority_bits") fail_config("universe.class_rule must be 'majority_bits'");
        out["universe"] = u;
    }
    json obs = in.contains("observers") ? in.at("observers") : json::object();
    if (obs.contains("file")) {
        check_keys(obs, "observers", {"file"});
        out["observers"] = json{{"file", absolute_path(obs.at("file").get<std::string>())}};
    } else {
        json syn = obs.contains("synthetic") ? obs.at("synthetic") : json::object();
        check_keys(obs, "observers", {"synthetic"});
        check_keys(syn, "observers.synthetic", {"count", "memory_fraction", "matcher", "seed"});
        json s;
        s["count"] = field_or<std::size_t>(syn, "count", 4);
        s["memory_fraction"] = field_or<double>(syn, "memory_fraction", 0.25);
        s["matcher"] = syn.contains("matcher") ? syn.at("matcher") : json("exact");
        s["seed"] = syn.contains("seed") ? syn.at("seed").get<std::uint64_t>()
                                         : out["seed"].get<std::uint64_t>();
        out["observers"] = json{{"synthetic", s}};
    }
    if (!in.contains("outputs")) fail_config("metrics config needs 'outputs'");
    json outs = in.at("outputs");
    if (outs.contains("file")) {
        check_keys(outs, "outputs", {"file"});
        out["outputs"] = json{{"file", absolute_path(outs.at("file").get<std::string>())}};
    } else if (outs.contains("samples_csv")) {
        check_keys(outs, "outputs", {"samples_csv", "quantize_tol"});
        out["outputs"] =
            json{{"samples_csv", absolute_path(outs.at("samples_csv").get<std::string>())},
                 {"quantize_tol", field_or<double>(outs, "quantize_tol", 0.25)}};
    } else if (outs.contains("items")) {
        check_keys(outs, "outputs", {"items"});
        out["outputs"] = json{{"items", outs.at("items").get<std::vector<std::string>>()}};
    } else {
        fail_config("outputs needs 'file', 'samples_csv', or 'items'");
    }
    out["class_id"] = field_or<int>(in, "class_id", 0);
    return out;
}

Universe universe_from_config(const json& u) {
    if (u.contains("file")) {
        try {
            return Universe::from_csv(read_file(u.at("file").get<std::string>()));
        } catch (const artifact_error&) {
            throw;
        } catch (const std::exception& e) {
            throw artifact_error("universe file unavailable: " + std::string(e.what()));
        }
    }
    Universe uni = make_binary_universe(u.at("rows").get<std::size_t>(),
                                        u.at("cols").get<std::size_t>());
    std::size_t n_bits = u.at("rows").get<std::size_t>() * u.at("cols").get<std::size_t>();
    for (const std::vector<int>& b : uni.bits) {
        int ones = 0;
        for (int v : b) ones += v;
        uni.classes.push_back(2 * static_cast<std::size_t>(ones) >= n_bits ? 1 : 0);
    }
    return uni;
}

ObserverPopulation observers_from_config(const json& o, const Universe& u) {
    if (o.contains("file")) {
        try {
            return observers_from_csv(read_file(o.at("file").get<std::string>()), u);
        } catch (const std::exception& e) {
            throw artifact_error("observer file unavailable: " + std::string(e.what()));
        }
    }
    const json& syn = o.at("synthetic");
    std::size_t count = syn.at("count").get<std::size_t>();
    double fraction = syn.at("memory_fraction").get<double>();
    if (!(fraction >= 0.0 && fraction <= 1.0))
        fail_config("observers.synthetic.memory_fraction must lie in [0, 1]");
    Matcher matcher;
    if (syn.at("matcher").is_string() && syn.at("matcher") == "exact")
        matcher = exact_match_matcher();
    else if (syn.at("matcher").is_object() && syn.at("matcher").contains("hamming"))
        matcher = hamming_matcher(syn.at("matcher").at("hamming").get<int>());
    else
        fail_config("observers.synthetic.matcher must be 'exact' or {\"hamming\": d}");
    std::uint64_t seed = syn.at("seed").get<std::uint64_t>();
    ObserverPopulation obs;
    for (std::size_t k = 0; k < count; ++k) {
        Observer o_k;
        o_k.id = "obs_" + std::to_string(k);
        Rng rng(seed, k);
        for (std::size_t i = 0; i < u.size(); ++i)
            if (rng.uniform() < fraction) o_k.memory.push_back(i);
        o_k.matcher = matcher;
        o_k.classifier = class_map_classifier();
        obs.push_back(std::move(o_k));
    }
    return obs;
}

ModelOutputSet outputs_from_config(const json& o, const Universe& u) {
    if (o.contains("file")) {
        try {
            return outputs_from_csv(read_file(o.at("file").get<std::string>()), u);
        } catch (const std::exception& e) {
            throw artifact_error("outputs file unavailable: " + std::string(e.what()));
        }
    }
    if (o.contains("items")) {
        ModelOutputSet out;
        for (const std::string& id : o.at("items").get<std::vector<std::string>>()) {
            std::optional<std::size_t> idx = u.find(id);
            if (!idx.has_value()) fail_config("outputs.items: unknown item id '" + id + "'");
            out.inside.push_back(*idx);
        }
        return out;
    }
    std::string text;
    try {
        text = read_file(o.at("samples_csv").get<std::string>());
    } catch (const std::exception& e) {
        throw artifact_error("samples file unavailable: " + std::string(e.what()));
    }
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0] != "sample_id,component_index,value")
        throw artifact_error("samples file must use the final-state schema "
                             "`sample_id,component_index,value`");
    std::vector<std::vector<double>> by_sample;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() != 3) throw artifact_error("samples file row malformed");
        std::size_t sid = static_cast<std::size_t>(parse_int(f[0]));
        std::size_t comp = static_cast<std::size_t>(parse_int(f[1]));
        if (sid >= by_sample.size()) by_sample.resize(sid + 1);
        if (comp >= by_sample[sid].size()) by_sample[sid].resize(comp + 1);
        by_sample[sid][comp] = parse_double(f[2]);
    }
    std::vector<Tensor> tensors;
    for (std::vector<double>& v : by_sample) {
        if (v.empty()) throw artifact_error("samples file has a gap in sample ids");
        std::size_t n = v.size();
        tensors.push_back(Tensor({n}, std::move(v)));
    }
    return quantize_outputs(tensors, u, nearest_bit_quantizer(o.at("quantize_tol").get<double>()));
}

std::string rate_cell(const std::optional<double>& v) {
    return v.has_value() ? format_double(*v) : "undefined";
}

int cmd_metrics(const json& resolved, const std::string& out_dir) {
    write_resolved(out_dir, resolved);
    Universe u = universe_from_config(resolved.at("universe"));
    ObserverPopulation obs = observers_from_config(resolved.at("observers"), u);
    ModelOutputSet outputs = outputs_from_config(resolved.at("outputs"), u);
    int class_id = resolved.at("class_id").get<int>();

    NoveltyRates rates = novelty_rates(u, obs, outputs);

    // Independent recomputation by direct double loops over the raw
    // definitions; the report carries both so disagreement is visible.
    std::uint64_t unseen = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double nu = 0.0;
        for (const Observer& o : obs)
            for (std::size_t m : o.memory) nu += o.matcher(u, i, m);
        if (nu == 0.0) ++unseen;
    }
    std::set<std::size_t> inside_set(outputs.inside.begin(), outputs.inside.end());
    std::uint64_t novel = 0;
    for (std::size_t i : inside_set) {
        double nu = 0.0;
        for (const Observer& o : obs)
            for (std::size_t m : o.memory) nu += o.matcher(u, i, m);
        if (nu == 0.0) ++novel;
    }
    auto ratio = [](std::uint64_t a, std::uint64_t b) -> std::optional<double> {
        if (b == 0) return std::nullopt;
        return static_cast<double>(a) / static_cast<double>(b);
    };
    std::optional<double> cross_nio = ratio(unseen, u.size());
    std::optional<double> cross_cm = ratio(inside_set.size(), u.size());
    std::optional<double> cross_nm = ratio(novel, inside_set.size());
    // Product form of the model-novelty relation, assembled from the other
    // three rates.
    std::optional<double> cross_nmo;
    if (cross_cm.has_value() && cross_nm.has_value() && cross_nio.has_value() &&
        *cross_nio != 0.0)
        cross_nmo = *cross_cm * *cross_nm / *cross_nio;

    double rm = 0.0;
    bool rm_defined = outputs.total() > 0 && !obs.empty();
    std::optional<double> cross_rm;
    if (rm_defined) {
        rm = model_realism(u, outputs, obs, class_id);
        double acc = 0.0;
        for (std::size_t i : outputs.inside) {
            double votes = 0.0;
            for (const Observer& o : obs) votes += o.classifier(u, i, class_id);
            acc += votes / static_cast<double>(obs.size());
        }
        cross_rm = acc / static_cast<double>(outputs.total());
    }

    std::string csv = "metric,value,crosscheck\n";
    csv += "intrinsic_novelty," + rate_cell(rates.intrinsic_novelty) + "," + rate_cell(cross_nio) + "\n";
    csv += "completeness," + rate_cell(rates.completeness) + "," + rate_cell(cross_cm) + "\n";
    csv += "relative_novelty," + rate_cell(rates.relative_novelty) + "," + rate_cell(cross_nm) + "\n";
    csv += "model_novelty," + rate_cell(rates.model_novelty) + "," + rate_cell(cross_nmo) + "\n";
    csv += "model_realism," + (rm_defined ? format_double(rm) : std::string("undefined")) + "," +
           rate_cell(cross_rm) + "\n";
    csv += "universe_count," + std::to_string(rates.universe_count) + "," +
           std::to_string(u.size()) + "\n";
    csv += "new_count," + std::to_string(rates.new_count) + "," + std::to_string(unseen) + "\n";
    csv += "inside_distinct," + std::to_string(rates.inside_distinct) + "," +
           std::to_string(inside_set.size()) + "\n";
    csv += "novel_distinct," + std::to_string(rates.novel_distinct) + "," +
           std::to_string(novel) + "\n";
    write_output(out_dir, "metrics.csv", csv);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "dgen: desk-scale generative-diffusion experiments.\n"
        "Each command reads a JSON config (--config) and writes CSV artifacts plus\n"
        "resolved_config.json into --out; rerunning any command on that resolved\n"
        "copy reproduces every output byte for byte.\n\n"
        "Output schemas:\n"
        "  forward-sim: trajectories.csv `traj_id,t,component_index,value`,\n"
        "               hist_t<k>.csv `bin_left,bin_right,count`, schedule.csv\n"
        "  train:       train_log.csv `step,loss,grad_norm,eval_metric`,\n"
        "               ckpt_<step>.bin, schedule.csv, vocab.csv (conditioned)\n"
        "  sample:      samples.csv `sample_id[,t],component_index,value`\n"
        "  cold:        restoration_report.csv `input_id,iterative_l1,one_step_l1`,\n"
        "               train_log.csv, op.json, ckpt_<step>.bin\n"
        "  metrics:     metrics.csv `metric,value,crosscheck`\n\n"
        "Schedule tables use `t,beta,alpha,alpha_bar,sigma_sq`.\n"
        "Seed defaults to $DGEN_SEED (else 0) when the config omits it.\n"
        "Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 missing artifact."};
    app.require_subcommand(1);

    struct SubArgs {
        std::string config;
        std::string out;
    };
    std::map<std::string, SubArgs> args;
    for (const char* name : {"forward-sim", "train", "sample", "cold", "metrics"}) {
        CLI::App* sub = app.add_subcommand(name, "");
        sub->add_option("--config", args[name].config, "JSON config path")->required();
        sub->add_option("--out", args[name].out, "output directory")->required();
    }
    app.get_subcommand("forward-sim")
        ->description("simulate forward-noising trajectories and per-time histograms");
    app.get_subcommand("train")->description("train the noise predictor, write checkpoints + log");
    app.get_subcommand("sample")->description("ancestral sampling from a trained checkpoint");
    app.get_subcommand("cold")->description("degradation/restoration training and report");
    app.get_subcommand("metrics")->description("observer-based novelty and realism rates");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    std::string name = app.get_subcommands().front()->get_name();
    const SubArgs& a = args[name];
    try {
        std::error_code ec;
        fs::create_directories(a.out, ec);
        if (ec) fail_config("cannot create output directory '" + a.out + "': " + ec.message());
        json raw = load_config_file(a.config);
        if (name == "forward-sim") return cmd_forward_sim(resolve_forward_sim(raw), a.out);
        if (name == "train") return cmd_train(resolve_train_cmd(raw), a.out);
        if (name == "sample") return cmd_sample(resolve_sample(raw), a.out);
        if (name == "cold") return cmd_cold(resolve_cold(raw), a.out);
        return cmd_metrics(resolve_metrics(raw), a.out);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const artifact_error& e) {
        std::cerr << "artifact error: " << e.what() << "\n";
        return kExitArtifact;
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::out_of_range& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
