#include "wdc/service.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "httplib.h"

#include "wdc/config_json.hpp"
#include "wdc/image_io.hpp"
#include "wdc/messages_io.hpp"

namespace wdc {

using nlohmann::json;

Rgb transmission_color(double t)
{
    static constexpr std::array<Rgb, 5> stops{{{0, 0, 1}, {0, 1, 1}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}}};
    const double s = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 4.0;
    const int k = std::min(3, static_cast<int>(s));
    const double f = s - k;
    Rgb out;
    for (int c = 0; c < 3; ++c)
        out[c] = stops[k][c] + (stops[k + 1][c] - stops[k][c]) * f;
    return out;
}

ImageRgb pseudo_color(const ScalarMap& t)
{
    ImageRgb img(t.width(), t.height());
    for (std::size_t i = 0; i < t.size(); ++i)
        img.set_pixel(i, transmission_color(t[i]));
    return img;
}

namespace {

ImageRgb gray(const ScalarMap& m)
{
    ImageRgb img(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i)
        img.set_pixel(i, Rgb{m[i], m[i], m[i]});
    return img;
}

// W spans many decades, so its preview is logarithmic: max(W) white, min(W) black.
ImageRgb weight_preview(const ScalarMap& w)
{
    const double hi = w.max();
    const double lo = std::max(w.min(), 1e-300);
    ScalarMap v(w.width(), w.height(), 1.0);
    if (hi > lo) {
        const double span = std::log(hi / lo);
        for (std::size_t i = 0; i < w.size(); ++i)
            v[i] = std::log(std::max(w[i], lo) / lo) / span;
    }
    return gray(v);
}

std::string to_string(const std::vector<std::uint8_t>& bytes)
{
    return {bytes.begin(), bytes.end()};
}

StrokeKind parse_stroke_kind(const std::string& name)
{
    if (name == "constraint")
        return StrokeKind::Constraint;
    if (name == "picker")
        return StrokeKind::Picker;
    throw ServiceError(422, "unknown stroke kind '" + name + "'");
}

const char* const kPreviewKinds[] = {"j", "t", "b", "weights"};

} // namespace

SessionService::SessionService(ServiceOptions options) : options_(options)
{
    std::random_device rd;
    id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string SessionService::new_id()
{
    // splitmix64 over a salted counter: unique per process, not guessable across restarts.
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    const std::uint64_t n = ++id_counter_;
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << mix(id_salt_ ^ n) << std::setw(16) << mix(n * 31 + id_salt_);
    return os.str();
}

std::vector<Stroke> SessionService::parse_strokes(const std::string& body)
{
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception& e) {
        throw ServiceError(400, std::string("malformed JSON: ") + e.what());
    }
    std::vector<Stroke> strokes;
    try {
        for (const auto& s : doc.at("strokes")) {
            Stroke stroke;
            stroke.kind = parse_stroke_kind(s.at("kind").get<std::string>());
            for (const auto& p : s.at("pixels")) {
                if (!p.is_array() || p.size() != 2)
                    throw ServiceError(422, "pixel entries must be [x, y] pairs");
                stroke.pixels.push_back({p[0].get<int>(), p[1].get<int>()});
            }
            strokes.push_back(std::move(stroke));
        }
    } catch (const json::exception& e) {
        throw ServiceError(422, std::string("invalid stroke list: ") + e.what());
    }
    return strokes;
}

nlohmann::json SessionService::create(const std::string& image_bytes, const std::string& config_json)
{
    if (image_bytes.size() > options_.max_upload_bytes)
        throw ServiceError(413, "image exceeds the upload limit",
                           {{"limit_bytes", options_.max_upload_bytes}, {"size_bytes", image_bytes.size()}});
    DehazeConfig cfg;
    try {
        if (!config_json.empty())
            cfg = config_from_json(json::parse(config_json));
    } catch (const json::exception& e) {
        throw ServiceError(400, std::string("malformed config: ") + e.what());
    } catch (const Error& e) {
        throw ServiceError(400, e.what());
    }

    auto s = std::make_shared<Session>();
    try {
        const auto* data = reinterpret_cast<const std::uint8_t*>(image_bytes.data());
        s->image = decode_image(std::span(data, image_bytes.size()), cfg.max_side);
    } catch (const Error& e) {
        throw ServiceError(400, std::string("cannot decode image: ") + e.what());
    }
    s->config = cfg;
    try {
        s->base = dehaze(s->image, cfg);
    } catch (const Error& e) {
        throw ServiceError(422, e.what());
    }
    s->current = s->base;
    s->last_access = Clock::now();
    refresh(*s);

    evict_idle();
    std::lock_guard lock(mutex_);
    s->id = new_id();
    sessions_[s->id] = s;
    return describe(*s);
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id)
{
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end())
        throw ServiceError(404, "unknown session '" + id + "'");
    return it->second;
}

nlohmann::json SessionService::snapshot(const std::string& id)
{
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    s->last_access = Clock::now();
    return describe(*s);
}

nlohmann::json SessionService::submit(const std::string& id, const std::vector<Stroke>& strokes)
{
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    s->last_access = Clock::now();

    std::set<std::pair<int, int>> constraint, picker;
    std::size_t pickers = 0;
    for (const auto& stroke : strokes) {
        if (stroke.pixels.empty())
            throw ServiceError(422, "stroke has no pixels");
        for (const auto& p : stroke.pixels)
            if (!s->image.contains(p.x, p.y))
                throw ServiceError(422, "stroke pixel outside the image",
                                   {{"pixel", {p.x, p.y}}, {"width", s->image.width()}, {"height", s->image.height()}});
        auto& target = stroke.kind == StrokeKind::Picker ? picker : constraint;
        for (const auto& p : stroke.pixels)
            target.insert({p.y, p.x});
        pickers += stroke.kind == StrokeKind::Picker;
    }
    if (constraint.empty())
        throw ServiceError(422, "a submission needs at least one constraint stroke");
    if (pickers > 1)
        throw ServiceError(422, "a submission takes at most one picker stroke");

    MessageRecord rec;
    for (const auto& [y, x] : constraint)
        rec.message.pixels.push_back({x, y});
    double max_b = 0.0;
    for (const auto& p : rec.message.pixels)
        max_b = std::max(max_b, s->current.lower_bound.at(p.x, p.y));
    double ts = max_b;
    rec.source = "max_b";
    if (!picker.empty()) {
        double acc = 0.0;
        for (const auto& [y, x] : picker)
            acc += s->current.transmission.at(x, y);
        ts = acc / static_cast<double>(picker.size());
        rec.source = "picker";
        rec.picker_pixels = picker.size();
    }
    rec.message.target = ts;
    try {
        resolve_message_target(rec.message, s->current.lower_bound);
    } catch (const MessageError& e) {
        throw ServiceError(422, e.what(), {{"t_s", ts}, {"max_b", max_b}, {"source", rec.source}});
    }

    auto mean_over = [&](const ScalarMap& t) {
        double acc = 0.0;
        for (const auto& p : rec.message.pixels)
            acc += t.at(p.x, p.y);
        return acc / static_cast<double>(rec.message.pixels.size());
    };
    const double before = mean_over(s->current.transmission);
    s->messages.push_back(rec);
    try {
        refresh(*s);
    } catch (const Error& e) {
        s->messages.pop_back();
        refresh(*s);
        throw ServiceError(500, std::string("re-solve failed: ") + e.what());
    }

    json out = describe(*s);
    out["t_s"] = ts;
    out["t_s_source"] = rec.source;
    out["max_b"] = max_b;
    out["constraint_pixels"] = rec.message.pixels.size();
    out["mean_t_before"] = before;
    out["mean_t_after"] = mean_over(s->current.transmission);
    return out;
}

nlohmann::json SessionService::undo(const std::string& id)
{
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    s->last_access = Clock::now();
    if (s->messages.empty())
        throw ServiceError(409, "nothing to undo");
    s->messages.pop_back();
    refresh(*s);
    return describe(*s);
}

std::string SessionService::preview(const std::string& id, const std::string& kind)
{
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    s->last_access = Clock::now();
    auto it = s->previews.find(kind);
    if (it == s->previews.end())
        throw ServiceError(404, "unknown preview '" + kind + "'");
    return it->second;
}

// Current result is always recomputed from (image, config, messages), never patched.
void SessionService::refresh(Session& s)
{
    if (s.messages.empty()) {
        s.current = s.base;
    } else {
        std::vector<EwdcMessage> msgs;
        for (const auto& r : s.messages)
            msgs.push_back(r.message);
        s.current = apply_messages(s.image, s.config, msgs);
    }
    ++s.revision;
    s.previews["j"] = to_string(encode_png(s.current.radiance));
    s.previews["t"] = to_string(encode_png(pseudo_color(s.current.transmission)));
    s.previews["b"] = to_string(encode_png(gray(s.current.lower_bound)));
    s.previews["weights"] = to_string(encode_png(weight_preview(s.current.weights)));
}

nlohmann::json SessionService::describe(const Session& s) const
{
    json messages = json::array();
    for (const auto& r : s.messages) {
        json pixels = json::array();
        for (const auto& p : r.message.pixels)
            pixels.push_back({p.x, p.y});
        messages.push_back(
            {{"pixels", std::move(pixels)}, {"t_s", *r.message.target}, {"source", r.source},
             {"picker_pixels", r.picker_pixels}});
    }
    json previews = json::object();
    for (const char* kind : kPreviewKinds)
        previews[kind] = "/sessions/" + s.id + "/preview/" + kind + ".png?rev=" + std::to_string(s.revision);
    return {
        {"id", s.id},
        {"width", s.image.width()},
        {"height", s.image.height()},
        {"revision", s.revision},
        {"config", config_to_json(s.config)},
        {"airlight",
         {{"rgb", s.current.airlight.rgb()}, {"source", s.current.diagnostics.airlight_estimated ? "estimated" : "config"}}},
        {"messages", std::move(messages)},
        {"diagnostics", diagnostics_to_json(s.current.diagnostics)},
        {"mean_t", s.current.transmission.mean()},
        {"previews", std::move(previews)},
    };
}

std::size_t SessionService::evict_idle(Clock::time_point now)
{
    std::lock_guard lock(mutex_);
    std::size_t removed = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        // try_lock: a session busy with a request is by definition not idle.
        std::unique_lock slock(it->second->mutex, std::try_to_lock);
        if (slock.owns_lock() && now - it->second->last_access > options_.idle_timeout) {
            slock.unlock();
            it = sessions_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

std::size_t SessionService::session_count() const
{
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

namespace {

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class F>
httplib::Server::Handler guarded(F f)
{
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ServiceError& e) {
            json body = e.detail();
            body["error"] = e.what();
            send_json(res, e.status(), body);
        } catch (const std::exception& e) {
            send_json(res, 500, {{"error", e.what()}});
        }
    };
}

} // namespace

void install_routes(httplib::Server& server, SessionService& service)
{
    // Multipart framing overhead on top of the image cap; larger bodies get 413 from httplib.
    server.set_payload_max_length(kMaxUploadBytes + (1u << 20));
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    server.Post("/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    if (!req.is_multipart_form_data() || !req.has_file("image"))
                        throw ServiceError(400, "expected multipart/form-data with an 'image' part");
                    const std::string config = req.has_file("config") ? req.get_file_value("config").content : "";
                    send_json(res, 201, service.create(req.get_file_value("image").content, config));
                }));
    server.Get(R"(/sessions/([0-9a-f]+))", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, 200, service.snapshot(req.matches[1]));
               }));
    server.Post(R"(/sessions/([0-9a-f]+)/strokes)",
                guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    const std::string id = req.matches[1];
                    service.snapshot(id); // 404 before 400/422 for unknown sessions
                    send_json(res, 200, service.submit(id, SessionService::parse_strokes(req.body)));
                }));
    server.Post(R"(/sessions/([0-9a-f]+)/undo)", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    send_json(res, 200, service.undo(req.matches[1]));
                }));
    server.Get(R"(/sessions/([0-9a-f]+)/preview/([a-z]+)\.png)",
               guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   res.set_content(service.preview(req.matches[1], req.matches[2]), "image/png");
                   res.set_header("Cache-Control", "no-store");
               }));
}

} // namespace wdc
