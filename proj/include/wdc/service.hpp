#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "wdc/dehaze.hpp"

namespace httplib {
class Server;
}

namespace wdc {

/// Blue -> cyan -> green -> yellow -> red over t in [0,1] (warmer means more transmission).
Rgb transmission_color(double t);
ImageRgb pseudo_color(const ScalarMap& t);

enum class StrokeKind {
    Constraint, ///< blue mark: pixels that share one transmission
    Picker,     ///< red mark: where that transmission is read from
};

struct Stroke {
    StrokeKind kind = StrokeKind::Constraint;
    std::vector<PixelCoord> pixels;
};

/// One accepted submission, kept with the resolved t_s so replay is exact.
struct MessageRecord {
    EwdcMessage message; ///< target always set
    std::string source;  ///< "picker" or "max_b"
    std::size_t picker_pixels = 0;
};

/// Carries the HTTP status a failure maps to plus a JSON payload.
class ServiceError : public Error {
public:
    ServiceError(int status, const std::string& what, nlohmann::json detail = nlohmann::json::object())
        : Error(what), status_(status), detail_(std::move(detail))
    {
    }
    int status() const { return status_; }
    const nlohmann::json& detail() const { return detail_; }

private:
    int status_;
    nlohmann::json detail_;
};

inline constexpr std::size_t kMaxUploadBytes = 25u * 1024u * 1024u;

struct ServiceOptions {
    std::chrono::seconds idle_timeout{30 * 60};
    std::size_t max_upload_bytes = kMaxUploadBytes;
};

class SessionService {
public:
    using Clock = std::chrono::steady_clock;

    explicit SessionService(ServiceOptions options = {});

    /// Decodes, resizes and dehazes the upload. 400 on undecodable input or a bad config,
    /// 413 when the image exceeds the upload cap. Returns the snapshot of the new session.
    nlohmann::json create(const std::string& image_bytes, const std::string& config_json);
    nlohmann::json snapshot(const std::string& id);
    /// Forms one message from the strokes and re-solves. 404 unknown id, 422 invalid strokes
    /// or infeasible t_s.
    nlohmann::json submit(const std::string& id, const std::vector<Stroke>& strokes);
    /// 409 when there is nothing to undo.
    nlohmann::json undo(const std::string& id);
    /// PNG bytes of j, t, b or weights. 404 for an unknown id or kind.
    std::string preview(const std::string& id, const std::string& kind);

    /// Drops sessions idle for longer than the timeout; returns how many were removed.
    std::size_t evict_idle(Clock::time_point now = Clock::now());
    std::size_t session_count() const;

    static std::vector<Stroke> parse_strokes(const std::string& body);

private:
    struct Session {
        std::string id;
        ImageRgb image; ///< already resized to max_side
        DehazeConfig config;
        DehazeResult base;
        DehazeResult current;
        std::vector<MessageRecord> messages;
        std::map<std::string, std::string> previews;
        std::uint64_t revision = 0;
        Clock::time_point last_access;
        std::mutex mutex;
    };

    std::shared_ptr<Session> find(const std::string& id);
    void refresh(Session& s);
    nlohmann::json describe(const Session& s) const;
    std::string new_id();

    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t id_counter_ = 0;
    std::uint64_t id_salt_ = 0;
};

/// Registers the HTTP routes on `server`; `service` must outlive it.
void install_routes(httplib::Server& server, SessionService& service);

} // namespace wdc
