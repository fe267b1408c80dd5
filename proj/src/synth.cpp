#include "wdc/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

#include "wdc/image_io.hpp"

namespace wdc {

void SceneSpec::validate() const
{
    if (!(beta >= 0.0))
        throw Error("beta must be >= 0");
    if (!depth.same_shape(radiance))
        throw Error("depth map does not match the radiance dimensions");
    for (double d : depth.values())
        if (!(d >= 0.0))
            throw Error("depth must be non-negative");
}

ScalarMap SceneSpec::transmission() const
{
    ScalarMap t(depth.width(), depth.height());
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = std::exp(-beta * depth[i]);
    return t;
}

HazyScene synthesize_haze(const SceneSpec& spec)
{
    spec.validate();
    HazyScene out{ImageRgb(spec.radiance.width(), spec.radiance.height()), spec.transmission()};
    for (std::size_t i = 0; i < spec.radiance.pixel_count(); ++i) {
        const double t = out.transmission[i];
        const Rgb j = spec.radiance.pixel(i);
        Rgb hazy;
        for (int c = 0; c < 3; ++c)
            hazy[c] = t * j[c] + (1.0 - t) * spec.airlight[c];
        out.hazy.set_pixel(i, hazy);
    }
    return out;
}

std::string_view to_string(SceneKind kind)
{
    switch (kind) {
    case SceneKind::Steps:
        return "steps";
    case SceneKind::Occluder:
        return "occluder";
    case SceneKind::Gradient:
        return "gradient";
    case SceneKind::Perforated:
        return "perforated";
    }
    return "unknown";
}

SceneKind parse_scene_kind(std::string_view name)
{
    for (auto kind : {SceneKind::Steps, SceneKind::Occluder, SceneKind::Gradient, SceneKind::Perforated})
        if (to_string(kind) == name)
            return kind;
    throw Error("unknown scene kind '" + std::string(name) + "'");
}

namespace {

constexpr int kTile = 4;

struct OccluderRect {
    int x0, x1, y0, y1;

    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

OccluderRect occluder_rect(int w, int h)
{
    return {w / 4, w - w / 4, h / 4, h - h / 4};
}

bool in_hole(int w, int h, int x, int y)
{
    const OccluderRect rect = occluder_rect(w, h);
    const int sx = rect.x1 - rect.x0;
    const int sy = rect.y1 - rect.y0;
    const int r = std::max(3, std::min(w, h) / 20);
    for (int cy : {rect.y0 + sy / 4, rect.y0 + 3 * sy / 4})
        for (int cx : {rect.x0 + sx / 4, rect.x0 + 3 * sx / 4})
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
                return true;
    return false;
}

// Tile colors sit on the 1/255 grid so 8-bit PNG sidecars reproduce them exactly.
ImageRgb textured_radiance(int w, int h, std::uint32_t seed)
{
    std::mt19937 rng(seed);
    auto level = [&](unsigned lo, unsigned hi) { return (lo + rng() % (hi - lo + 1)) / 255.0; };

    const int tx_count = (w + kTile - 1) / kTile;
    const int ty_count = (h + kTile - 1) / kTile;
    std::vector<Rgb> colors(static_cast<std::size_t>(tx_count) * ty_count);
    for (auto& c : colors)
        c = {level(40, 230), level(40, 230), level(40, 230)};

    // One dark tile in every 2x2 block of tiles, plus sparse extra ones.
    for (int by = 0; by < ty_count; by += 2) {
        for (int bx = 0; bx < tx_count; bx += 2) {
            const int pick = static_cast<int>(rng() % 4);
            for (int k = 0; k < 4; ++k) {
                const int tx = bx + k % 2;
                const int ty = by + k / 2;
                const bool extra = rng() % 100 < 15;
                if (tx >= tx_count || ty >= ty_count)
                    continue;
                if (k == pick || extra)
                    colors[static_cast<std::size_t>(ty) * tx_count + tx][rng() % 3] = 0.0;
            }
        }
    }

    ImageRgb img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.set_pixel(x, y, colors[static_cast<std::size_t>(y / kTile) * tx_count + x / kTile]);
    return img;
}

} // namespace

SceneSpec make_test_scene(SceneKind kind, int size, double beta, AirLight airlight, std::uint32_t seed)
{
    return make_test_scene(kind, size, size, beta, airlight, seed);
}

SceneSpec make_test_scene(SceneKind kind, int width, int height, double beta, AirLight airlight, std::uint32_t seed)
{
    if (width < 16 || height < 16)
        throw Error("test scenes require both sides >= 16");
    SceneSpec spec;
    spec.radiance = textured_radiance(width, height, seed);
    spec.depth = ScalarMap(width, height);
    spec.beta = beta;
    spec.airlight = airlight;

    const OccluderRect rect = occluder_rect(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double d = 0.0;
            switch (kind) {
            case SceneKind::Steps:
                d = y < height / 3 ? 1.0 : (y < 2 * height / 3 ? 2.0 : 4.0);
                break;
            case SceneKind::Occluder:
                d = rect.contains(x, y) ? 1.0 : 8.0;
                break;
            case SceneKind::Gradient:
                d = 1.0 + 7.0 * x / (width - 1);
                break;
            case SceneKind::Perforated:
                d = rect.contains(x, y) && !in_hole(width, height, x, y) ? 1.0 : 8.0;
                break;
            }
            spec.depth.at(x, y) = d;
        }
    }
    spec.validate();
    return spec;
}

MaskMap perforation_mask(int size)
{
    return perforation_mask(size, size);
}

MaskMap perforation_mask(int width, int height)
{
    MaskMap mask{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height)};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            mask.data[static_cast<std::size_t>(y) * width + x] = in_hole(width, height, x, y) ? 1 : 0;
    return mask;
}

double mse(const ImageRgb& a, const ImageRgb& b)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw Error("mse: dimension mismatch");
    const auto sa = a.samples(), sb = b.samples();
    if (sa.empty())
        return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < sa.size(); ++i)
        acc += (sa[i] - sb[i]) * (sa[i] - sb[i]);
    return acc / static_cast<double>(sa.size());
}

double mse(const ScalarMap& a, const ScalarMap& b)
{
    if (!a.same_shape(b))
        throw Error("mse: dimension mismatch");
    if (a.size() == 0)
        return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

double mse(const ScalarMap& a, const ScalarMap& b, const MaskMap& mask)
{
    if (!a.same_shape(b) || mask.width != a.width() || mask.height != a.height())
        throw Error("mse: dimension mismatch");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask.data[i])
            continue;
        acc += (a[i] - b[i]) * (a[i] - b[i]);
        ++count;
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

ScalarMap luminance(const ImageRgb& img)
{
    ScalarMap y(img.width(), img.height());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const Rgb p = img.pixel(i);
        y[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
    return y;
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::array<double, kSsimWindow> gaussian_taps()
{
    std::array<double, kSsimWindow> taps{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += taps[i];
    }
    for (auto& t : taps)
        t /= sum;
    return taps;
}

// Separable Gaussian filter evaluated only where the window fits ("valid" region).
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h)
{
    static const auto taps = gaussian_taps();
    const int ow = w - kSsimWindow + 1;
    const int oh = h - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k)
                acc += taps[k] * in[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k)
                acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const ScalarMap& a, const ScalarMap& b)
{
    if (!a.same_shape(b))
        throw Error("ssim: dimension mismatch");
    if (std::min(a.width(), a.height()) < kSsimWindow)
        throw Error("ssim: image too small (min side must be >= 11)");
    const int w = a.width(), h = a.height();
    const std::size_t n = a.size();
    std::vector<double> x(a.values().begin(), a.values().end()), y(b.values().begin(), b.values().end());
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, w, h), my = filter_valid(y, w, h);
    const auto mxx = filter_valid(xx, w, h), myy = filter_valid(yy, w, h), mxy = filter_valid(xy, w, h);

    constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
    constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cov = mxy[i] - mx[i] * my[i];
        acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return acc / static_cast<double>(mx.size());
}

double ssim(const ImageRgb& a, const ImageRgb& b)
{
    return ssim(luminance(a), luminance(b));
}

void save_scene(const SceneSpec& spec, const std::filesystem::path& json_path)
{
    spec.validate();
    const auto stem = json_path.stem().string();
    const auto dir = json_path.parent_path();
    const std::string radiance_name = stem + "_radiance.png";
    const std::string depth_name = stem + "_depth.png";

    const double depth_scale = std::max(spec.depth.max(), 1e-12);
    ScalarMap normalized(spec.depth.width(), spec.depth.height());
    for (std::size_t i = 0; i < normalized.size(); ++i)
        normalized[i] = spec.depth[i] / depth_scale;

    save_image(spec.radiance, dir / radiance_name);
    save_map16(normalized, dir / depth_name);

    const nlohmann::json doc = {
        {"radiance", radiance_name},
        {"depth", depth_name},
        {"depth_scale", depth_scale},
        {"beta", spec.beta},
        {"airlight", {spec.airlight[0], spec.airlight[1], spec.airlight[2]}},
    };
    std::ofstream out(json_path);
    if (!out)
        throw IoError("cannot write '" + json_path.string() + "'");
    out << doc.dump(2) << '\n';
}

SceneSpec load_scene(const std::filesystem::path& json_path)
{
    std::ifstream in(json_path);
    if (!in)
        throw IoError("cannot open '" + json_path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(json_path.string() + ": " + e.what());
    }
    const auto dir = json_path.parent_path();
    SceneSpec spec;
    try {
        spec.radiance = load_image(dir / doc.at("radiance").get<std::string>());
        spec.depth = load_map(dir / doc.at("depth").get<std::string>());
        const double scale = doc.at("depth_scale").get<double>();
        for (auto& d : spec.depth.values())
            d *= scale;
        spec.beta = doc.at("beta").get<double>();
        const auto a = doc.at("airlight").get<std::vector<double>>();
        if (a.size() != 3)
            throw IoError("airlight must have three channels");
        spec.airlight = AirLight(Rgb{a[0], a[1], a[2]});
    } catch (const nlohmann::json::exception& e) {
        throw IoError(json_path.string() + ": " + e.what());
    }
    spec.validate();
    return spec;
}

} // namespace wdc
