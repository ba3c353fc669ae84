#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>

#include "iflow/config.hpp"
#include "iflow/error.hpp"
#include "iflow/flow.hpp"
#include "iflow/gradcheck.hpp"
#include "iflow/pipeline.hpp"
#include "iflow/synth.hpp"

namespace iflow::cli {

namespace {

constexpr const char* kEngineVersion = "iflow 0.1.0";
const std::vector<double> kDefaultFractions{0.125, 0.25, 0.5, 0.75, 0.875};

// SOURCE_DATE_EPOCH pins timestamps so manifests are reproducible too.
std::string timestamp() {
    std::time_t now = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

struct Manifest {
    std::string command;
    std::vector<std::string> args;
    std::uint64_t seed = 0;
    std::string started = timestamp();
    std::string config_text;
    std::vector<std::pair<std::string, std::string>> inputs;
    std::vector<std::pair<std::string, std::string>> outputs;
    std::vector<std::pair<std::string, std::string>> notes;

    void write(const std::string& path) const {
        KeyValueConfig kv;
        kv.set("engine", kEngineVersion);
        kv.set("command", command);
        kv.set("argv", join(args, " "));
        kv.set("seed", std::to_string(seed));
        kv.set("started", started);
        kv.set("finished", timestamp());
        const auto cfg = KeyValueConfig::parse(config_text, "config");
        for (const auto& k : cfg.keys()) kv.set("config." + k, cfg.get_string(k));
        for (const auto& [k, v] : inputs) kv.set("input." + k, v);
        for (const auto& [k, v] : outputs) kv.set("output." + k, v);
        for (const auto& [k, v] : notes) kv.set(k, v);
        write_text_file(path, kv.dump());
    }
};

std::string path_in(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::string file_label(const std::string& label) {
    std::string out = label;
    for (auto& c : out) {
        if (c == '=' || c == '/' || c == ' ') c = '_';
    }
    return out;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    try {
        return KeyValueConfig::parse(what + " = " + text, "--" + what).get_doubles(what);
    } catch (const ParseError& e) {
        throw CLI::ValidationError("--" + what, "expected comma-separated numbers, got '" + text + "'");
    }
}

/// Encode settings shared by `encode` and `ablate`: preset, then config file, then flags.
struct EncodeFlags {
    std::string preset = "desk";
    std::string config_path;
    std::uint64_t seed = 0;
    std::string strategy, loss;
    std::size_t hidden_layers = 0, width = 0, hyper_width = 0, iterations = 0, batch_size = 0;
    double omega = 0, t0 = 0, t1 = 0, lr = 0, beta1 = 0, beta2 = 0;
    std::map<std::string, CLI::Option*> opts;

    void attach(CLI::App* app) {
        app->add_option("--preset", preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
        app->add_option("--config", config_path, "encode config file (key = value)");
        opts["seed"] = app->add_option("--seed", seed, "random seed (default 0)");
        opts["strategy"] = app->add_option("--strategy", strategy, "hypernet, single_siren or two_sirens");
        opts["loss"] = app->add_option("--loss", loss, "squared or norm");
        opts["hidden_layers"] = app->add_option("--hidden-layers", hidden_layers);
        opts["width"] = app->add_option("--width", width);
        opts["omega"] = app->add_option("--omega", omega);
        opts["hyper_width"] = app->add_option("--hyper-width", hyper_width);
        opts["t0"] = app->add_option("--t0", t0, "time coordinate of the first flow");
        opts["t1"] = app->add_option("--t1", t1, "time coordinate of the second flow");
        opts["iterations"] = app->add_option("--iterations", iterations);
        opts["lr"] = app->add_option("--lr", lr);
        opts["beta1"] = app->add_option("--beta1", beta1);
        opts["beta2"] = app->add_option("--beta2", beta2);
        opts["batch_size"] = app->add_option("--batch-size", batch_size);
    }

    EncodeConfig resolve() const {
        EncodeConfig cfg = EncodeConfig::preset(preset);
        if (!config_path.empty()) {
            const auto kv = KeyValueConfig::load(config_path);
            if (kv.has("preset")) cfg = EncodeConfig::preset(kv.get_string("preset"));
            cfg.apply(kv);
        }
        KeyValueConfig flags;
        auto set = [&](const std::string& key, const std::string& value) {
            if (opts.at(key)->count()) flags.set(key, value);
        };
        set("seed", std::to_string(seed));
        set("strategy", strategy);
        set("loss", loss);
        set("hidden_layers", std::to_string(hidden_layers));
        set("width", std::to_string(width));
        set("omega", format_double(omega));
        set("hyper_width", std::to_string(hyper_width));
        set("t0", format_double(t0));
        set("t1", format_double(t1));
        set("iterations", std::to_string(iterations));
        set("lr", format_double(lr));
        set("beta1", format_double(beta1));
        set("beta2", format_double(beta2));
        set("batch_size", std::to_string(batch_size));
        cfg.apply(KeyValueConfig::parse(flags.dump(), "command line"));
        cfg.validate();
        return cfg;
    }
};

std::vector<double> resolve_times(const EncodedScene& scene, const std::string& t_text, const std::string& frac_text,
                                  bool default_fractions) {
    std::vector<double> ts;
    if (!t_text.empty()) {
        ts = parse_list(t_text, "t");
    } else {
        const auto fr = frac_text.empty() ? (default_fractions ? kDefaultFractions : std::vector<double>{0.5})
                                          : parse_list(frac_text, "fractions");
        for (double f : fr) ts.push_back(f == 1.0 ? scene.t1 : scene.t0 + f * (scene.t1 - scene.t0));
    }
    std::vector<std::string> bad;
    for (double t : ts) {
        if (!(t >= std::min(scene.t0, scene.t1) && t <= std::max(scene.t0, scene.t1))) bad.push_back(format_double(t));
    }
    if (!bad.empty()) {
        throw DomainError("t outside the encoded interval [" + format_double(scene.t0) + ", " + format_double(scene.t1) +
                          "]: " + join(bad, ", "));
    }
    return ts;
}

int cmd_synth(const std::string& spec_path, std::optional<double> t0, std::optional<double> t1, const std::string& out,
              Manifest& m) {
    const auto spec = scene_from_config(KeyValueConfig::load(spec_path));
    const double a = t0.value_or(spec.t0);
    const double b = t1.value_or(spec.t1);
    const auto [fwd, bwd] = scene_bidirectional(spec, a, b);
    std::filesystem::create_directories(out);
    save_ppm(path_in(out, "I_t0.ppm"), scene_image(spec, a));
    save_ppm(path_in(out, "I_t1.ppm"), scene_image(spec, b));
    save_flo(path_in(out, "fwd.flo"), fwd);
    save_flo(path_in(out, "bwd.flo"), bwd);
    write_text_file(path_in(out, "scene.txt"), scene_to_text(spec));
    m.config_text = scene_to_text(spec) + "interval = " + format_double(a) + ", " + format_double(b) + "\n";
    m.inputs = {{"spec", spec_path}};
    m.outputs = {{"image0", "I_t0.ppm"}, {"image1", "I_t1.ppm"}, {"fwd", "fwd.flo"}, {"bwd", "bwd.flo"},
                 {"scene", "scene.txt"}};
    m.write(path_in(out, "manifest.txt"));
    return 0;
}

int cmd_encode(const std::string& fwd_path, const std::string& bwd_path, const EncodeFlags& flags,
               const std::string& image0, const std::string& image1, const std::string& out, Manifest& m,
               std::ostream& os) {
    const EncodeConfig cfg = flags.resolve();
    const auto fwd = load_flo(fwd_path);
    const auto bwd = load_flo(bwd_path);
    EncodedScene scene = encode(fwd, bwd, cfg);
    scene.image0 = image0;
    scene.image1 = image1;
    save_encoded(scene, out);
    write_text_file(path_in(out, "config.txt"), cfg.to_text());
    std::string hist = "iteration,loss\n";
    for (std::size_t i = 0; i < scene.loss_history.size(); ++i) {
        hist += std::to_string(i) + "," + format_double(scene.loss_history[i]) + "\n";
    }
    write_text_file(path_in(out, "loss.csv"), hist);
    m.seed = cfg.seed;
    m.config_text = cfg.to_text();
    m.inputs = {{"fwd", fwd_path}, {"bwd", bwd_path}};
    if (!image0.empty()) m.inputs.emplace_back("image0", image0);
    if (!image1.empty()) m.inputs.emplace_back("image1", image1);
    m.outputs = {{"scene", "scene.txt"}, {"config", "config.txt"}, {"loss_history", "loss.csv"}};
    m.notes = {{"final_loss", format_double(scene.final_loss)}};
    m.write(path_in(out, "manifest.txt"));
    os << "final_loss " << format_double(scene.final_loss) << "\n";
    return 0;
}

int cmd_interp(const std::string& scene_dir, const std::string& t_text, const std::string& frac_text,
               std::string image0, std::string image1, std::optional<double> max_mag, const std::string& out,
               Manifest& m, std::ostream& os) {
    const auto scene = load_encoded(scene_dir);
    const auto ts = resolve_times(scene, t_text, frac_text, false);
    if (image0.empty()) image0 = scene.image0;
    if (image1.empty()) image1 = scene.image1;
    std::optional<Image> i0, i1;
    if (!image0.empty() && !image1.empty()) {
        i0 = load_ppm(image0);
        i1 = load_ppm(image1);
    }
    std::filesystem::create_directories(out);
    m.inputs = {{"scene", scene_dir}};
    if (i0) {
        m.inputs.emplace_back("image0", image0);
        m.inputs.emplace_back("image1", image1);
    }
    for (double t : ts) {
        const std::string sub = "t_" + format_double(t);
        const std::string dir = path_in(out, sub);
        std::filesystem::create_directories(dir);
        const auto [to0, to1] = interpolate_flows(scene, t);
        save_flo(path_in(dir, "F_to_t0.flo"), to0);
        save_flo(path_in(dir, "F_to_t1.flo"), to1);
        save_ppm(path_in(dir, "F_to_t0.ppm"), flow_to_color(to0, max_mag));
        save_ppm(path_in(dir, "F_to_t1.ppm"), flow_to_color(to1, max_mag));
        m.outputs.emplace_back(sub, "F_to_t0.flo, F_to_t1.flo, F_to_t0.ppm, F_to_t1.ppm");
        if (i0) {
            save_ppm(path_in(dir, "frame.ppm"), render_intermediate(scene, *i0, *i1, t));
            m.outputs.back().second += ", frame.ppm";
        }
        os << "t " << format_double(t) << " -> " << dir << "\n";
    }
    m.config_text = "t = " + format_doubles(ts) + "\n";
    m.write(path_in(out, "manifest.txt"));
    return 0;
}

int cmd_eval(const std::string& scene_dir, const std::string& oracle_path, const std::string& t_text,
             const std::string& frac_text, const std::string& out, Manifest& m, std::ostream& os) {
    const auto scene = load_encoded(scene_dir);
    const auto oracle = scene_from_config(KeyValueConfig::load(oracle_path));
    const auto ts = resolve_times(scene, t_text, frac_text, true);
    const std::string csv = to_csv(evaluate(scene, oracle, ts));
    std::filesystem::create_directories(out);
    write_text_file(path_in(out, "eval.csv"), csv);
    m.config_text = "t = " + format_doubles(ts) + "\n";
    m.inputs = {{"scene", scene_dir}, {"oracle", oracle_path}};
    m.outputs = {{"report", "eval.csv"}};
    m.write(path_in(out, "manifest.txt"));
    os << csv;
    return 0;
}

int cmd_ablate(const std::string& spec_path, const std::string& sweep_name, const std::string& values_text,
               const std::string& frac_text, bool timing, const EncodeFlags& flags, const std::string& out,
               Manifest& m, std::ostream& os, std::ostream& es) {
    const auto spec = scene_from_config(KeyValueConfig::load(spec_path));
    const EncodeConfig cfg = flags.resolve();
    AblationSweep sweep;
    if (sweep_name == "strategy") {
        sweep.kind = SweepKind::strategy;
    } else {
        sweep.kind = sweep_name == "omega" ? SweepKind::omega : SweepKind::coord_distance;
        if (values_text.empty()) throw CLI::ValidationError("--values", "the " + sweep_name + " sweep needs --values");
        sweep.values = parse_list(values_text, "values");
    }
    const auto fractions = frac_text.empty() ? std::vector<double>{0.5} : parse_list(frac_text, "fractions");
    const auto runs = ablate(sweep, spec, cfg, fractions, timing);
    std::filesystem::create_directories(out);
    const std::string csv = to_csv(rows_of(runs));
    write_text_file(path_in(out, "ablation.csv"), csv);
    m.seed = cfg.seed;
    m.config_text = cfg.to_text() + "sweep = " + sweep_name + "\n" +
                    (sweep.values.empty() ? "" : "values = " + format_doubles(sweep.values) + "\n") +
                    "fractions = " + format_doubles(fractions) + "\n";
    m.inputs = {{"spec", spec_path}};
    m.outputs = {{"report", "ablation.csv"}};
    int code = 0;
    for (const auto& run : runs) {
        if (run.flow_color) {
            const std::string name = "flow_" + file_label(run.label) + ".ppm";
            save_ppm(path_in(out, name), *run.flow_color);
            m.outputs.emplace_back(file_label(run.label), name);
        }
        if (!run.error.empty()) {
            m.notes.emplace_back("failed." + file_label(run.label), run.error);
            es << "error: run " << run.label << " failed: " << run.error << "\n";
            code = 1;
        }
    }
    m.write(path_in(out, "manifest.txt"));
    os << csv;
    return code;
}

int cmd_gradcheck(std::size_t trials, std::uint64_t seed, double tolerance, std::ostream& os) {
    const auto report = gradcheck(trials, seed);
    for (std::size_t i = 0; i < report.cases.size(); ++i) {
        const auto& c = report.cases[i];
        os << "case " << i << ": siren " << c.siren.hidden_layers << "x" << c.siren.width << " omega "
           << format_double(c.siren.omega) << ", hyper width " << c.hyper.hidden_width << ", loss "
           << to_string(c.loss) << ": max rel error " << c.max_rel_error << "\n";
    }
    os << "max rel error " << report.max_rel_error << " (tolerance " << tolerance << ")\n";
    return report.max_rel_error <= tolerance ? 0 : 1;
}

int cmd_viz(const std::string& flo, std::optional<double> max_mag, const std::string& out, Manifest& m) {
    const auto f = load_flo(flo);
    const auto parent = std::filesystem::path(out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    save_ppm(out, flow_to_color(f, max_mag));
    m.config_text = max_mag ? "max_magnitude = " + format_double(*max_mag) + "\n" : "max_magnitude = auto\n";
    m.inputs = {{"flow", flo}};
    m.outputs = {{"image", out}};
    m.write(out + ".manifest.txt");
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-conditioned implicit flow interpolation", "iflow"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kEngineVersion);

    std::string spec_path, out_path, fwd_path, bwd_path, image0, image1, scene_dir, t_text, frac_text, oracle_path;
    std::string sweep_name, values_text, flo_path;
    double t0 = 0, t1 = 0, max_mag = 0, tolerance = 1e-4;
    std::size_t trials = 20;
    std::uint64_t seed = 0;
    bool timing = false;

    auto* synth = app.add_subcommand("synth", "render a synthetic scene and its exact bidirectional flows");
    synth->add_option("--spec", spec_path, "scene spec file")->required();
    auto* synth_t0 = synth->add_option("--t0", t0, "first frame time (default: the scene file's t0)");
    auto* synth_t1 = synth->add_option("--t1", t1, "second frame time (default: the scene file's t1)");
    synth->add_option("--seed", seed, "random seed (recorded; scenes are analytic)");
    synth->add_option("--out", out_path, "output directory")->required();

    EncodeFlags encode_flags;
    auto* enc = app.add_subcommand("encode", "encode a bidirectional flow pair");
    enc->add_option("--fwd", fwd_path, "forward flow (.flo)")->required();
    enc->add_option("--bwd", bwd_path, "backward flow (.flo)")->required();
    enc->add_option("--image0", image0, "first frame (PPM), recorded for interp");
    enc->add_option("--image1", image1, "second frame (PPM), recorded for interp");
    enc->add_option("--out", out_path, "output directory")->required();
    encode_flags.attach(enc);

    auto* interp = app.add_subcommand("interp", "synthesize intermediate flows and frames");
    interp->add_option("--scene", scene_dir, "encoded scene directory")->required();
    auto* interp_t = interp->add_option("--t", t_text, "comma-separated time coordinates");
    interp->add_option("--fractions", frac_text, "comma-separated fractions of [t0, t1]")->excludes(interp_t);
    interp->add_option("--image0", image0, "first frame (PPM)");
    interp->add_option("--image1", image1, "second frame (PPM)");
    auto* interp_mag = interp->add_option("--max-magnitude", max_mag, "color-wheel saturation magnitude");
    interp->add_option("--out", out_path, "output directory")->required();

    auto* ev = app.add_subcommand("eval", "compare interpolated flows with an analytic scene");
    ev->add_option("--scene", scene_dir, "encoded scene directory")->required();
    ev->add_option("--oracle", oracle_path, "scene spec the flows came from")->required();
    auto* ev_t = ev->add_option("--t", t_text, "comma-separated time coordinates");
    ev->add_option("--fractions", frac_text, "fractions of [t0, t1] (default 0.125,0.25,0.5,0.75,0.875)")
        ->excludes(ev_t);
    ev->add_option("--out", out_path, "output directory")->required();

    EncodeFlags ablate_flags;
    auto* abl = app.add_subcommand("ablate", "sweep omega, coordinate distance or strategy");
    abl->add_option("--spec", spec_path, "scene spec file")->required();
    abl->add_option("--sweep", sweep_name, "omega, coord_distance or strategy")
        ->required()
        ->check(CLI::IsMember({"omega", "coord_distance", "strategy"}));
    abl->add_option("--values", values_text, "comma-separated sweep values");
    abl->add_option("--fractions", frac_text, "fractions of [t0, t1] to evaluate (default 0.5)");
    abl->add_flag("--timing", timing, "fill the seconds column");
    abl->add_option("--out", out_path, "output directory")->required();
    ablate_flags.attach(abl);

    auto* gc = app.add_subcommand("gradcheck", "check end-to-end gradients against finite differences");
    gc->add_option("--trials", trials, "random configurations");
    gc->add_option("--seed", seed, "random seed");
    gc->add_option("--tolerance", tolerance, "maximum relative error");

    auto* viz = app.add_subcommand("viz", "render a .flo file with the color wheel");
    viz->add_option("--flo", flo_path, "flow file")->required();
    auto* viz_mag = viz->add_option("--max-magnitude", max_mag, "color-wheel saturation magnitude");
    viz->add_option("--out", out_path, "output PPM")->required();

    std::vector<char*> argv;
    std::vector<std::string> storage = args;
    if (storage.empty()) storage.push_back("iflow");
    for (auto& s : storage) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    Manifest m;
    m.args = storage;
    m.command = app.get_subcommands().front()->get_name();
    try {
        const auto opt_mag = [&](CLI::Option* o) { return o->count() ? std::optional<double>(max_mag) : std::nullopt; };
        if (synth->parsed()) {
            m.seed = seed;
            return cmd_synth(spec_path, synth_t0->count() ? std::optional(t0) : std::nullopt,
                             synth_t1->count() ? std::optional(t1) : std::nullopt, out_path, m);
        }
        if (enc->parsed()) return cmd_encode(fwd_path, bwd_path, encode_flags, image0, image1, out_path, m, out);
        if (interp->parsed()) {
            return cmd_interp(scene_dir, t_text, frac_text, image0, image1, opt_mag(interp_mag), out_path, m, out);
        }
        if (ev->parsed()) return cmd_eval(scene_dir, oracle_path, t_text, frac_text, out_path, m, out);
        if (abl->parsed()) {
            return cmd_ablate(spec_path, sweep_name, values_text, frac_text, timing, ablate_flags, out_path, m, out,
                              err);
        }
        if (gc->parsed()) return cmd_gradcheck(trials, seed, tolerance, out);
        if (viz->parsed()) return cmd_viz(flo_path, opt_mag(viz_mag), out_path, m);
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace iflow::cli
