#include <doctest.h>

#include <mtp/scenario.hpp>

#include <sstream>

using namespace mtp;

namespace {

Scenario reparse(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

std::string error_of(const std::string& text) {
    try {
        reparse(text);
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

const char* kHeader =
    R"({"schema":"mtp-scenario","version":1,"fps":10.0,"frames":5,"name":"t","seed":0,"params":{}})";

}  // namespace

TEST_CASE("empty scenario round-trips") {
    Scenario s;
    s.frames = 0;
    s.name = "empty";
    const std::string a = serialize_scenario(s);
    const std::string b = serialize_scenario(reparse(a));
    CHECK(a == b);
}

TEST_CASE("generated scenarios round-trip byte-identically") {
    CrossingParams cp;
    cp.noise_sigma = 0.3;
    std::vector<Scenario> scns = {synth_crossing(cp, 12),
                                  synth_dropout({}, 5),
                                  synth_clutter({.clutter_rate = 1.5}, 7)};
    for (const auto& s : scns) {
        const std::string a = serialize_scenario(s);
        const std::string b = serialize_scenario(reparse(a));
        CHECK(a == b);
    }
}

TEST_CASE("parser names the offending field and line") {
    SUBCASE("score out of range") {
        const std::string text =
            std::string(kHeader) +
            "\n{\"type\":\"det\",\"frame\":0,\"id\":0,\"class\":\"car\","
            "\"score\":1.3,\"box\":[0,0,0,4,2,1.6,0]}\n";
        const std::string msg = error_of(text);
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("score") != std::string::npos);
    }
    SUBCASE("frame out of range") {
        const std::string text =
            std::string(kHeader) +
            "\n{\"type\":\"det\",\"frame\":9,\"id\":0,\"class\":\"car\","
            "\"score\":1.0,\"box\":[0,0,0,4,2,1.6,0]}\n";
        const std::string msg = error_of(text);
        CHECK(msg.find("frame") != std::string::npos);
    }
    SUBCASE("non-positive box dimension") {
        const std::string text =
            std::string(kHeader) +
            "\n{\"type\":\"det\",\"frame\":0,\"id\":0,\"class\":\"car\","
            "\"score\":1.0,\"box\":[0,0,0,-4,2,1.6,0]}\n";
        const std::string msg = error_of(text);
        CHECK(msg.find("box") != std::string::npos);
    }
    SUBCASE("gt frames must increase") {
        const std::string text =
            std::string(kHeader) +
            "\n{\"type\":\"gt\",\"gt_id\":0,\"frame\":2,\"class\":\"car\","
            "\"box\":[0,0,0,4,2,1.6,0]}"
            "\n{\"type\":\"gt\",\"gt_id\":0,\"frame\":2,\"class\":\"car\","
            "\"box\":[0,0,0,4,2,1.6,0]}\n";
        const std::string msg = error_of(text);
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("strictly increasing") != std::string::npos);
    }
    SUBCASE("unknown record type") {
        const std::string text =
            std::string(kHeader) + "\n{\"type\":\"bogus\"}\n";
        CHECK(error_of(text).find("type") != std::string::npos);
    }
    SUBCASE("unknown schema version") {
        CHECK(error_of(R"({"schema":"mtp-scenario","version":9,"fps":10,"frames":1})")
                  .find("version") != std::string::npos);
    }
    SUBCASE("invalid json reports the line") {
        const std::string text = std::string(kHeader) + "\n{not json\n";
        CHECK(error_of(text).find("line 2") != std::string::npos);
    }
    SUBCASE("missing header") {
        CHECK(error_of("").find("header") != std::string::npos);
    }
}

TEST_CASE("generators are pure functions of params and seed") {
    CrossingParams cp;
    cp.noise_sigma = 0.25;
    CHECK(serialize_scenario(synth_crossing(cp, 3)) ==
          serialize_scenario(synth_crossing(cp, 3)));
    CHECK(serialize_scenario(synth_crossing(cp, 3)) !=
          serialize_scenario(synth_crossing(cp, 4)));
    ClutterParams kp;
    kp.clutter_rate = 2.0;
    kp.noise_sigma = 0.2;
    CHECK(serialize_scenario(synth_clutter(kp, 3)) ==
          serialize_scenario(synth_clutter(kp, 3)));
}

TEST_CASE("degenerate generator parameters are rejected") {
    CrossingParams cp;
    cp.angle_deg = 0.0;
    CHECK_THROWS_AS(synth_crossing(cp, 1), std::invalid_argument);
    DropoutParams dp;
    dp.drop_windows = {DropWindow{0, 10, 100}};
    CHECK_THROWS_AS(synth_dropout(dp, 1), std::invalid_argument);
    dp.drop_windows = {DropWindow{5, 0, 3}};
    CHECK_THROWS_AS(synth_dropout(dp, 1), std::invalid_argument);
    ClutterParams kp;
    kp.clutter_rate = -1.0;
    CHECK_THROWS_AS(synth_clutter(kp, 1), std::invalid_argument);
}

TEST_CASE("crossing paths intersect at the origin mid-sequence") {
    CrossingParams cp;
    cp.speed = 1.0;
    cp.angle_deg = 90.0;
    cp.frames = 20;
    Scenario s = synth_crossing(cp, 0);
    REQUIRE(s.gt.size() == 2);
    for (const auto& t : s.gt) {
        auto b = t.box_at(10);
        REQUIRE(b);
        CHECK(b->cx == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(b->cy == doctest::Approx(0.0).epsilon(1e-9));
        // Constant speed along the whole path.
        for (int f = 1; f < cp.frames; ++f) {
            auto a = t.box_at(f - 1);
            auto c = t.box_at(f);
            CHECK(std::hypot(c->cx - a->cx, c->cy - a->cy) ==
                  doctest::Approx(1.0));
        }
    }
    // Noise-free detections coincide with GT.
    for (int f = 0; f < cp.frames; ++f)
        CHECK(s.detections[static_cast<std::size_t>(f)].size() == 2);
}

TEST_CASE("dropout removes exactly the windowed detections") {
    DropoutParams dp;
    dp.n_agents = 2;
    dp.frames = 20;
    dp.drop_windows = {DropWindow{1, 5, 8}};
    Scenario s = synth_dropout(dp, 9);
    for (int f = 0; f < dp.frames; ++f) {
        bool agent1_present = false;
        for (const auto& d : s.detections[static_cast<std::size_t>(f)])
            if (d.detection_id == 1) agent1_present = true;
        CHECK(agent1_present == (f < 5 || f > 8));
    }
    // GT is untouched by dropout.
    REQUIRE(s.gt.size() == 2);
    for (const auto& t : s.gt) CHECK(t.points.size() == 20);
}

TEST_CASE("zero clutter rate reduces to the base scenario") {
    ClutterParams kp;
    kp.clutter_rate = 0.0;
    kp.noise_sigma = 0.3;
    Scenario s = synth_clutter(kp, 4);
    for (int f = 0; f < kp.frames; ++f)
        CHECK(s.detections[static_cast<std::size_t>(f)].size() ==
              static_cast<std::size_t>(kp.n_agents));
}

TEST_CASE("clutter detections are extra ids with bounded persistence") {
    ClutterParams kp;
    kp.clutter_rate = 1.0;
    kp.persistence = 3;
    Scenario s = synth_clutter(kp, 8);
    std::map<std::int64_t, int> appearances;
    int clutter_total = 0;
    for (const auto& frame : s.detections)
        for (const auto& d : frame)
            if (d.detection_id >= kp.n_agents) {
                ++appearances[d.detection_id];
                ++clutter_total;
            }
    CHECK(clutter_total > 0);
    for (const auto& [id, n] : appearances) CHECK(n <= kp.persistence);
    // GT never contains clutter.
    CHECK(s.gt.size() == static_cast<std::size_t>(kp.n_agents));
}

TEST_CASE("save and load round-trip through a file") {
    CrossingParams cp;
    cp.noise_sigma = 0.1;
    Scenario s = synth_crossing(cp, 21);
    const std::string path = "/tmp/mtp_test_scenario.jsonl";
    save_scenario(s, path);
    Scenario t = load_scenario(path);
    CHECK(serialize_scenario(s) == serialize_scenario(t));
    CHECK_THROWS(load_scenario("/tmp/mtp_does_not_exist.jsonl"));
}
