#pragma once

#include <json.hpp>

#include <mtp/geometry.hpp>
#include <mtp/random.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtp {

/// One detected box in one frame.
struct Detection {
    int frame = 0;
    std::int64_t detection_id = 0;
    Box3D box;
    std::string cls = "car";
    double score = 1.0;
};

struct GtPoint {
    int frame = 0;
    Box3D box;
};

/// A ground-truth object trajectory; frames strictly increasing.
struct GtTrajectory {
    std::int64_t gt_id = 0;
    std::string cls = "car";
    std::vector<GtPoint> points;

    std::optional<Box3D> box_at(int frame) const {
        for (const auto& p : points)
            if (p.frame == frame) return p.box;
        return std::nullopt;
    }
};

/// A detection/GT log for one sequence, in ego-frame coordinates.
struct Scenario {
    double fps = 10.0;
    int frames = 0;
    std::string name;
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();
    std::vector<std::vector<Detection>> detections;  // per frame
    std::vector<GtTrajectory> gt;
};

namespace detail {

inline nlohmann::json box_to_json(const Box3D& b) {
    return nlohmann::json::array(
        {b.cx, b.cy, b.cz, b.length, b.width, b.height, b.yaw});
}

inline Box3D box_from_json(const nlohmann::json& j, int line) {
    if (!j.is_array() || j.size() != 7)
        throw std::runtime_error("line " + std::to_string(line) +
                                 ": field 'box' must be a 7-element array");
    try {
        return Box3D(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                     j[3].get<double>(), j[4].get<double>(), j[5].get<double>(),
                     j[6].get<double>());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("line " + std::to_string(line) +
                                 ": field 'box': " + e.what());
    }
}

}  // namespace detail

inline std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    nlohmann::json header = {{"schema", "mtp-scenario"}, {"version", 1},
                             {"fps", s.fps},            {"frames", s.frames},
                             {"name", s.name},          {"seed", s.seed},
                             {"params", s.params}};
    out << header.dump() << "\n";
    for (const auto& frame_dets : s.detections) {
        for (const auto& d : frame_dets) {
            nlohmann::json rec = {{"type", "det"},
                                  {"frame", d.frame},
                                  {"id", d.detection_id},
                                  {"class", d.cls},
                                  {"score", d.score},
                                  {"box", detail::box_to_json(d.box)}};
            out << rec.dump() << "\n";
        }
    }
    for (const auto& t : s.gt) {
        for (const auto& p : t.points) {
            nlohmann::json rec = {{"type", "gt"},
                                  {"gt_id", t.gt_id},
                                  {"frame", p.frame},
                                  {"class", t.cls},
                                  {"box", detail::box_to_json(p.box)}};
            out << rec.dump() << "\n";
        }
    }
    return out.str();
}

inline Scenario parse_scenario(std::istream& in) {
    Scenario s;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
        }
        if (!have_header) {
            if (j.value("schema", "") != "mtp-scenario")
                throw std::runtime_error(
                    "line 1: field 'schema': expected 'mtp-scenario'");
            if (j.value("version", -1) != 1)
                throw std::runtime_error("line 1: field 'version': unknown "
                                         "schema version");
            s.fps = j.at("fps").get<double>();
            s.frames = j.at("frames").get<int>();
            s.name = j.value("name", "");
            s.seed = j.value("seed", std::uint64_t{0});
            s.params = j.value("params", nlohmann::json::object());
            if (s.frames < 0)
                throw std::runtime_error("line 1: field 'frames': negative");
            s.detections.resize(static_cast<std::size_t>(s.frames));
            have_header = true;
            continue;
        }
        const std::string type = j.value("type", "");
        if (type == "det") {
            Detection d;
            d.frame = j.at("frame").get<int>();
            d.detection_id = j.at("id").get<std::int64_t>();
            d.cls = j.at("class").get<std::string>();
            d.score = j.at("score").get<double>();
            if (d.score < 0.0 || d.score > 1.0)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": field 'score': out of [0,1]");
            if (d.frame < 0 || d.frame >= s.frames)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": field 'frame': out of range");
            d.box = detail::box_from_json(j.at("box"), line_no);
            s.detections[static_cast<std::size_t>(d.frame)].push_back(d);
        } else if (type == "gt") {
            const std::int64_t gid = j.at("gt_id").get<std::int64_t>();
            const int frame = j.at("frame").get<int>();
            if (frame < 0 || frame >= s.frames)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": field 'frame': out of range");
            GtTrajectory* traj = nullptr;
            for (auto& t : s.gt)
                if (t.gt_id == gid) traj = &t;
            if (!traj) {
                s.gt.push_back(GtTrajectory{gid, j.at("class").get<std::string>(), {}});
                traj = &s.gt.back();
            }
            if (!traj->points.empty() && traj->points.back().frame >= frame)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": field 'frame': gt frames must be "
                                         "strictly increasing");
            traj->points.push_back(
                GtPoint{frame, detail::box_from_json(j.at("box"), line_no)});
        } else {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": field 'type': unknown record type '" +
                                     type + "'");
        }
    }
    if (!have_header) throw std::runtime_error("line 1: missing header record");
    return s;
}

inline void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << serialize_scenario(s);
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return parse_scenario(in);
}

// ---------------------------------------------------------------------------
// Synthetic scenario generators. All are pure functions of (params, seed).
// ---------------------------------------------------------------------------

namespace detail {

struct Agent {
    double x0, y0, vx, vy;
    Box3D box_at(int frame) const {
        const double x = x0 + vx * frame;
        const double y = y0 + vy * frame;
        return Box3D(x, y, 0.8, 4.0, 2.0, 1.6, std::atan2(vy, vx));
    }
};

inline void emit_agents(Scenario& s, const std::vector<Agent>& agents,
                        double noise_sigma, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < agents.size(); ++i) {
        GtTrajectory t;
        t.gt_id = static_cast<std::int64_t>(i);
        for (int f = 0; f < s.frames; ++f)
            t.points.push_back(GtPoint{f, agents[i].box_at(f)});
        s.gt.push_back(std::move(t));
    }
    for (int f = 0; f < s.frames; ++f) {
        for (std::size_t i = 0; i < agents.size(); ++i) {
            Box3D b = agents[i].box_at(f);
            if (noise_sigma > 0.0) {
                b.cx += noise_sigma * rand_gaussian(rng);
                b.cy += noise_sigma * rand_gaussian(rng);
            }
            Detection d;
            d.frame = f;
            d.detection_id = static_cast<std::int64_t>(i);
            d.box = b;
            s.detections[static_cast<std::size_t>(f)].push_back(d);
        }
    }
}

}  // namespace detail

struct CrossingParams {
    double speed = 0.5;       // m/frame
    double angle_deg = 25.0;  // angle between the two paths
    double noise_sigma = 0.0; // detection position noise, meters
    int frames = 40;
    double fps = 10.0;
};

/// Two constant-velocity agents whose paths intersect at the origin
/// mid-sequence.
inline Scenario synth_crossing(const CrossingParams& p, std::uint64_t seed) {
    if (std::abs(p.angle_deg) < 1e-6)
        throw std::invalid_argument(
            "synth_crossing: parallel paths never cross (angle_deg = 0)");
    if (p.frames < 2) throw std::invalid_argument("synth_crossing: frames < 2");
    Scenario s;
    s.fps = p.fps;
    s.frames = p.frames;
    s.name = "crossing";
    s.seed = seed;
    s.params = {{"speed", p.speed},
                {"angle_deg", p.angle_deg},
                {"noise_sigma", p.noise_sigma}};
    s.detections.resize(static_cast<std::size_t>(p.frames));

    const double half = 0.5 * p.angle_deg * kPi / 180.0;
    const int mid = p.frames / 2;
    std::vector<detail::Agent> agents;
    for (int i = 0; i < 2; ++i) {
        const double a = (i == 0) ? half : -half;
        const double vx = p.speed * std::cos(a);
        const double vy = p.speed * std::sin(a);
        agents.push_back(detail::Agent{-vx * mid, -vy * mid, vx, vy});
    }
    std::mt19937_64 rng(seed);
    detail::emit_agents(s, agents, p.noise_sigma, rng);
    return s;
}

struct DropWindow {
    int agent = 0;
    int first = 0;
    int last = 0;  // inclusive
};

struct DropoutParams {
    int n_agents = 1;
    double speed = 0.5;
    double lane_spacing = 10.0;
    double noise_sigma = 0.0;
    std::vector<DropWindow> drop_windows;
    double drop_prob = 0.0;  // additional random per-detection drops
    int frames = 40;
    double fps = 10.0;
};

/// Parallel-lane agents with detections removed in the given windows.
inline Scenario synth_dropout(const DropoutParams& p, std::uint64_t seed) {
    if (p.n_agents < 1) throw std::invalid_argument("synth_dropout: n_agents < 1");
    for (const auto& w : p.drop_windows) {
        if (w.agent < 0 || w.agent >= p.n_agents || w.first < 0 ||
            w.last >= p.frames || w.first > w.last)
            throw std::invalid_argument(
                "synth_dropout: drop window outside frame range");
    }
    Scenario s;
    s.fps = p.fps;
    s.frames = p.frames;
    s.name = "dropout";
    s.seed = seed;
    s.params = {{"n_agents", p.n_agents},
                {"speed", p.speed},
                {"lane_spacing", p.lane_spacing},
                {"noise_sigma", p.noise_sigma},
                {"drop_prob", p.drop_prob}};
    s.detections.resize(static_cast<std::size_t>(p.frames));

    std::vector<detail::Agent> agents;
    for (int i = 0; i < p.n_agents; ++i)
        agents.push_back(detail::Agent{-p.speed * p.frames / 2.0,
                                       p.lane_spacing * i, p.speed, 0.0});
    std::mt19937_64 rng(seed);
    detail::emit_agents(s, agents, p.noise_sigma, rng);

    // Apply drops after generation so detection noise draws stay aligned
    // with the no-drop scenario for the same seed.
    std::mt19937_64 drop_rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (int f = 0; f < p.frames; ++f) {
        auto& dets = s.detections[static_cast<std::size_t>(f)];
        std::vector<Detection> kept;
        for (const auto& d : dets) {
            bool dropped = false;
            for (const auto& w : p.drop_windows)
                if (d.detection_id == w.agent && f >= w.first && f <= w.last)
                    dropped = true;
            if (!dropped && p.drop_prob > 0.0 &&
                rand_uniform(drop_rng, 0.0, 1.0) < p.drop_prob)
                dropped = true;
            if (!dropped) kept.push_back(d);
        }
        dets = std::move(kept);
    }
    return s;
}

struct ClutterParams {
    int n_agents = 2;
    double speed = 0.5;
    double lane_spacing = 10.0;
    double noise_sigma = 0.0;
    double clutter_rate = 0.0;  // expected false detections born per frame
    double extent = 30.0;       // clutter spawns uniformly in [-extent, extent]^2
    int persistence = 3;        // frames a clutter object re-appears
    int frames = 50;
    double fps = 10.0;
};

/// Base multi-agent scenario plus Poisson clutter uncorrelated with GT.
inline Scenario synth_clutter(const ClutterParams& p, std::uint64_t seed) {
    if (p.clutter_rate < 0.0)
        throw std::invalid_argument("synth_clutter: negative clutter rate");
    Scenario s;
    s.fps = p.fps;
    s.frames = p.frames;
    s.name = "clutter";
    s.seed = seed;
    s.params = {{"n_agents", p.n_agents},
                {"speed", p.speed},
                {"lane_spacing", p.lane_spacing},
                {"noise_sigma", p.noise_sigma},
                {"clutter_rate", p.clutter_rate},
                {"extent", p.extent},
                {"persistence", p.persistence}};
    s.detections.resize(static_cast<std::size_t>(p.frames));

    std::vector<detail::Agent> agents;
    for (int i = 0; i < p.n_agents; ++i)
        agents.push_back(detail::Agent{-p.speed * p.frames / 2.0,
                                       p.lane_spacing * i, p.speed, 0.0});
    std::mt19937_64 rng(seed);
    detail::emit_agents(s, agents, p.noise_sigma, rng);

    std::mt19937_64 clutter_rng(seed ^ 0xda3e39cb94b95bdbull);
    std::int64_t next_id = p.n_agents;
    for (int f = 0; f < p.frames; ++f) {
        // Poisson draw by inversion.
        int births = 0;
        if (p.clutter_rate > 0.0) {
            double l = std::exp(-p.clutter_rate), prod = 1.0;
            while (true) {
                prod *= rand_uniform(clutter_rng, 0.0, 1.0);
                if (prod <= l) break;
                ++births;
            }
        }
        for (int b = 0; b < births; ++b) {
            const double x = rand_uniform(clutter_rng, -p.extent, p.extent);
            const double y = rand_uniform(clutter_rng, -p.extent, p.extent);
            const double yaw = rand_uniform(clutter_rng, -kPi, kPi);
            for (int rep = 0; rep < p.persistence && f + rep < p.frames; ++rep) {
                Detection d;
                d.frame = f + rep;
                d.detection_id = next_id;
                d.score = 0.5;
                d.box = Box3D(x + 0.1 * rand_gaussian(clutter_rng),
                              y + 0.1 * rand_gaussian(clutter_rng), 0.8, 4.0,
                              2.0, 1.6, yaw);
                s.detections[static_cast<std::size_t>(f + rep)].push_back(d);
            }
            ++next_id;
        }
    }
    return s;
}

}  // namespace mtp
