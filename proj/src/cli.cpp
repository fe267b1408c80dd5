#include "wdc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "wdc/config_json.hpp"
#include "wdc/dehaze.hpp"
#include "wdc/image_io.hpp"
#include "wdc/messages_io.hpp"
#include "wdc/synth.hpp"

namespace wdc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags shared by `dehaze` and `messages`.
struct PipelineArgs {
    std::string input;
    std::string out;
    std::string trans;
    std::string out_dir;
    std::string dump_dir;
    std::string messages;
    std::string trace;
    std::string manifest;
    std::string mode = "wdc";
    std::string init = "dilation";
    int radius = kDefaultMaskRadius;
    double lambda = kDefaultLambda;
    double eps_t = kDefaultEpsT;
    std::string airlight;
    int max_side = kDefaultMaxSide;
    double cluster = 0.0;
    std::string emit;
};

struct SynthArgs {
    std::string spec;
    std::string scene = "occluder";
    int size = 96;
    int height = 0;
    double beta = 1.0;
    std::string airlight = "1,1,1";
    std::uint32_t seed = kDefaultSceneSeed;
    std::string out;
    std::string trans;
    std::string truth;
    std::string save_spec;
};

struct EvalArgs {
    std::string a;
    std::string b;
};

// Thrown for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

AirLight parse_airlight(const std::string& text)
{
    std::stringstream ss(text);
    std::string item;
    std::vector<double> v;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw UsageError("--airlight expects R,G,B with numbers in (0,1], got '" + text + "'");
        }
    }
    if (v.size() != 3 || std::any_of(v.begin(), v.end(), [](double c) { return !(c > 0.0 && c <= 1.0); }))
        throw UsageError("--airlight expects R,G,B with numbers in (0,1], got '" + text + "'");
    return AirLight(Rgb{v[0], v[1], v[2]});
}

void add_pipeline_options(CLI::App* cmd, PipelineArgs& a)
{
    cmd->add_option("--out", a.out, "Recovered radiance J (PNG or PPM)");
    cmd->add_option("--trans", a.trans, "Refined transmission t (16-bit PNG)");
    cmd->add_option("--mode", a.mode, "Refinement mode")->check(CLI::IsMember({"wdc", "cwdc"}));
    cmd->add_option("--init", a.init, "Initial transmission")->check(CLI::IsMember({"dilation", "opening"}));
    cmd->add_option("--radius", a.radius, "Mask radius in pixels")->check(CLI::PositiveNumber);
    cmd->add_option("--lambda", a.lambda, "Smoothness weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--eps-t", a.eps_t, "Transmission compensation")->check(CLI::NonNegativeNumber);
    cmd->add_option("--airlight", a.airlight, "Fixed air-light R,G,B (skips estimation)");
    cmd->add_option("--max-side", a.max_side, "Longest side after resizing")->check(CLI::PositiveNumber);
    cmd->add_option("--dump-intermediates", a.dump_dir, "Write b, t~, W and the dark-pixel mask here");
    cmd->add_option("--trace", a.trace, "Solver convergence trace (CSV)");
    cmd->add_option("--manifest", a.manifest, "Run manifest path (default: beside the first output)");
}

DehazeConfig make_config(const PipelineArgs& a)
{
    DehazeConfig cfg;
    cfg.mode = parse_mode(a.mode);
    cfg.initializer = {parse_initializer_kind(a.init), a.radius};
    cfg.lambda = a.lambda;
    cfg.eps_t = a.eps_t;
    cfg.max_side = a.max_side;
    if (!a.airlight.empty())
        cfg.airlight = parse_airlight(a.airlight);
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot write '" + path.string() + "'");
    f << text;
}

void dump_intermediates(const DehazeResult& r, const fs::path& dir)
{
    fs::create_directories(dir);
    save_map16(r.lower_bound, dir / "b.png");
    save_map16(r.initial_transmission, dir / "t_init.png");
    // W spans several decades; the PNG holds W / max(W), the scale goes to the manifest.
    const double wmax = std::max(r.weights.max(), 1e-300);
    ScalarMap w(r.weights.width(), r.weights.height());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = r.weights[i] / wmax;
    save_map16(w, dir / "weights.png");
    const MaskMap dark = dark_pixel_mask(r.initial_transmission, r.lower_bound, 0.0);
    ScalarMap m(dark.width, dark.height);
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = dark.data[i] ? 1.0 : 0.0;
    save_map16(m, dir / "dark_mask.png");
}

struct Outputs {
    fs::path out;
    fs::path trans;
    fs::path dump;
    fs::path trace;
    fs::path manifest;
};

json run_one(const fs::path& input, const DehazeConfig& cfg, const std::vector<EwdcMessage>* messages,
             const Outputs& o, std::ostream& out, std::ostream& err)
{
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const ImageRgb img = load_image(input);
    const auto t1 = Clock::now();
    SolverTrace trace;
    SolverTrace* tp = o.trace.empty() ? nullptr : &trace;
    const DehazeResult r = messages ? apply_messages(img, cfg, *messages, tp) : dehaze(img, cfg, tp);
    const auto t2 = Clock::now();
    if (!o.out.empty())
        save_image(r.radiance, o.out);
    if (!o.trans.empty())
        save_map16(r.transmission, o.trans);
    if (!o.dump.empty())
        dump_intermediates(r, o.dump);
    if (tp)
        trace.write_csv(o.trace);
    const auto t3 = Clock::now();

    if (!r.diagnostics.warning.empty())
        err << "wdc: warning: " << r.diagnostics.warning << "\n";
    auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    json manifest = {
        {"input", input.string()},
        {"input_size", {img.width(), img.height()}},
        {"working_size", {r.input.width(), r.input.height()}},
        {"config", config_to_json(cfg)},
        {"airlight",
         {{"rgb", r.airlight.rgb()}, {"source", r.diagnostics.airlight_estimated ? "estimated" : "flag"}}},
        {"timings", {{"load", secs(t0, t1)}, {"dehaze", secs(t1, t2)}, {"write", secs(t2, t3)}}},
        {"solver", diagnostics_to_json(r.diagnostics)},
        {"weights_max", r.weights.max()},
    };
    json outputs = json::object();
    if (!o.out.empty())
        outputs["radiance"] = o.out.string();
    if (!o.trans.empty())
        outputs["transmission"] = o.trans.string();
    if (!o.dump.empty())
        outputs["intermediates"] = o.dump.string();
    if (!o.trace.empty())
        outputs["trace"] = o.trace.string();
    manifest["outputs"] = outputs;
    if (messages)
        manifest["messages"] = json::parse(dump_messages(*messages))["messages"];
    if (!o.manifest.empty())
        write_text(o.manifest, manifest.dump(2) + "\n");

    std::ostringstream line;
    line << std::setprecision(6) << input.filename().string() << ": " << r.input.width() << "x" << r.input.height()
         << " mode=" << to_string(r.mode) << " airlight=" << r.airlight[0] << "," << r.airlight[1] << ","
         << r.airlight[2] << (r.diagnostics.airlight_estimated ? " (estimated)" : " (given)")
         << " mean_t=" << r.transmission.mean() << "\n";
    out << line.str();
    return manifest;
}

fs::path default_manifest(const Outputs& o)
{
    for (const fs::path& p : {o.out, o.trans})
        if (!p.empty())
            return p.parent_path() / (p.stem().string() + ".manifest.json");
    if (!o.dump.empty())
        return o.dump / "manifest.json";
    return {};
}

bool is_image_file(const fs::path& p)
{
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".ppm";
}

int cmd_dehaze(const PipelineArgs& a, bool message_mode, std::ostream& out, std::ostream& err)
{
    const DehazeConfig cfg = make_config(a);
    const fs::path input(a.input);

    if (fs::is_directory(input)) {
        if (message_mode || !a.messages.empty())
            throw UsageError("message files apply to a single image, not a directory");
        if (a.out_dir.empty())
            throw UsageError("directory input needs --out-dir");
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(input))
            if (e.is_regular_file() && is_image_file(e.path()))
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
        int failures = 0;
        for (const auto& f : files) {
            const fs::path dir(a.out_dir);
            Outputs o;
            o.out = dir / (f.stem().string() + "_J.png");
            o.trans = dir / (f.stem().string() + "_t.png");
            if (!a.dump_dir.empty())
                o.dump = fs::path(a.dump_dir) / f.stem();
            o.manifest = dir / (f.stem().string() + ".manifest.json");
            fs::create_directories(dir);
            try {
                run_one(f, cfg, nullptr, o, out, err);
            } catch (const Error& e) {
                // One bad file does not stop the batch.
                err << "wdc: " << f.string() << ": " << e.what() << "\n";
                ++failures;
            }
        }
        return failures ? 1 : 0;
    }

    Outputs o{a.out, a.trans, a.dump_dir, a.trace, a.manifest};
    if (o.out.empty() && o.trans.empty() && o.dump.empty() && a.emit.empty())
        throw UsageError("nothing to write: give --out, --trans or --dump-intermediates");
    if (o.manifest.empty())
        o.manifest = default_manifest(o);

    std::vector<EwdcMessage> messages;
    const bool with_messages = message_mode || !a.messages.empty();
    if (!a.messages.empty())
        messages = load_messages(a.messages);
    if (a.cluster > 0.0) {
        // Cluster on the working-size image so coordinates match the solve.
        const ImageRgb img = resize_max_side(load_image(input), cfg.max_side);
        const AirLight air = cfg.airlight ? *cfg.airlight : estimate_airlight(img, cfg.initializer.radius);
        auto clustered = cluster_messages(img, lower_bound(img, air), a.cluster);
        messages.insert(messages.end(), clustered.begin(), clustered.end());
    }
    if (message_mode && a.messages.empty() && a.cluster <= 0.0)
        throw UsageError("messages needs a message file or --cluster");
    if (!a.emit.empty())
        write_text(a.emit, dump_messages(messages) + "\n");
    run_one(input, cfg, with_messages ? &messages : nullptr, o, out, err);
    return 0;
}

int cmd_synth(const SynthArgs& a, std::ostream& out)
{
    SceneSpec spec;
    if (!a.spec.empty()) {
        spec = load_scene(a.spec);
    } else {
        spec = make_test_scene(parse_scene_kind(a.scene), a.size, a.height > 0 ? a.height : a.size, a.beta,
                               parse_airlight(a.airlight), a.seed);
    }
    const HazyScene hz = synthesize_haze(spec);
    save_image(hz.hazy, a.out);
    if (!a.trans.empty())
        save_map16(hz.transmission, a.trans);
    if (!a.truth.empty())
        save_image(spec.radiance, a.truth);
    if (!a.save_spec.empty())
        save_scene(spec, a.save_spec);
    out << std::setprecision(6) << "synth: " << hz.hazy.width() << "x" << hz.hazy.height() << " beta=" << spec.beta
        << " mean_t=" << hz.transmission.mean() << "\n";
    return 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out)
{
    const ImageRgb x = load_image(a.a);
    const ImageRgb y = load_image(a.b);
    if (x.width() != y.width() || x.height() != y.height())
        throw Error("eval: images differ in size");
    std::ostringstream line;
    line << std::setprecision(6) << "mse=" << mse(x, y) << " ssim=" << ssim(x, y) << "\n";
    out << line.str();
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Weighted dark channel dehazing"};
    app.name("wdc");
    app.require_subcommand(1);

    PipelineArgs dz;
    auto* dehaze_cmd = app.add_subcommand("dehaze", "Dehaze an image (or every PNG/PPM in a directory)");
    dehaze_cmd->add_option("input", dz.input, "Hazy image or directory")->required();
    dehaze_cmd->add_option("--messages", dz.messages, "EWDC message file (JSON)");
    dehaze_cmd->add_option("--out-dir", dz.out_dir, "Output directory for directory input");
    add_pipeline_options(dehaze_cmd, dz);

    PipelineArgs ms;
    auto* msg_cmd = app.add_subcommand("messages", "Dehaze with EWDC messages applied");
    msg_cmd->add_option("input", ms.input, "Hazy image")->required();
    msg_cmd->add_option("file", ms.messages, "EWDC message file (JSON)");
    msg_cmd->add_option("--messages", ms.messages, "EWDC message file (JSON)");
    msg_cmd->add_option("--cluster", ms.cluster, "Add one message per RGB cluster holding this pixel fraction")
        ->check(CLI::Range(0.0, 1.0));
    msg_cmd->add_option("--emit", ms.emit, "Write the message list that was applied");
    add_pipeline_options(msg_cmd, ms);

    SynthArgs sy;
    auto* synth_cmd = app.add_subcommand("synth", "Synthesize a hazy image with ground truth");
    synth_cmd->add_option("spec", sy.spec, "Scene JSON (default: a built-in scene)");
    synth_cmd->add_option("--scene", sy.scene, "Built-in scene")
        ->check(CLI::IsMember({"steps", "occluder", "gradient", "perforated"}));
    synth_cmd->add_option("--size", sy.size, "Width (and height unless --height)")->check(CLI::Range(16, 1 << 14));
    synth_cmd->add_option("--height", sy.height, "Height")->check(CLI::Range(16, 1 << 14));
    synth_cmd->add_option("--beta", sy.beta, "Attenuation per depth unit")->check(CLI::NonNegativeNumber);
    synth_cmd->add_option("--airlight", sy.airlight, "Air-light R,G,B");
    synth_cmd->add_option("--seed", sy.seed, "Texture seed");
    synth_cmd->add_option("--out", sy.out, "Hazy image")->required();
    synth_cmd->add_option("--trans", sy.trans, "True transmission (16-bit PNG)");
    synth_cmd->add_option("--truth", sy.truth, "True radiance");
    synth_cmd->add_option("--save-spec", sy.save_spec, "Write the scene as JSON plus PNG sidecars");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Print MSE and SSIM between two images");
    eval_cmd->add_option("a", ev.a, "First image")->required();
    eval_cmd->add_option("b", ev.b, "Second image")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (*dehaze_cmd)
            return cmd_dehaze(dz, false, out, err);
        if (*msg_cmd)
            return cmd_dehaze(ms, true, out, err);
        if (*synth_cmd)
            return cmd_synth(sy, out);
        return cmd_eval(ev, out);
    } catch (const UsageError& e) {
        err << "wdc: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "wdc: " << e.what() << "\n";
        return 1;
    }
}

} // namespace wdc
