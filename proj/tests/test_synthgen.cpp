#include <catch2/catch.hpp>

#include "vsyn/synthgen.hpp"

using namespace vsyn;

TEST_CASE("one agent yields one annotation per frame") {
    SceneScript s;
    s.frame_count = 30;
    s.width = 80;
    s.height = 60;
    AgentSpec a;
    a.width = 10;
    a.height = 10;
    a.start_x = 5;
    a.start_y = 5;
    a.vel_x = 1.0;
    s.agents.push_back(a);
    const GeneratedScene scene = generate(s);

    CHECK(scene.frames.size() == 30);
    REQUIRE(scene.annotations.frames.size() == 30);
    for (const auto& [f, boxes] : scene.annotations.frames) {
        REQUIRE(boxes.size() == 1);
        CHECK(boxes[0].box.x == 5 + static_cast<int>(f));
    }
    REQUIRE(scene.tubes.size() == 1);
    CHECK(scene.tubes[0].frames.size() == 30);
    CHECK(scene.tubes[0].frames[0].mask_patch.count_set() == 100);
}

TEST_CASE("a delete edit shortens the stream and is logged") {
    SceneScript s;
    s.frame_count = 200;
    s.width = 32;
    s.height = 32;
    EditSpec del;
    del.kind = "delete";
    del.start = 100;
    del.count = 20;
    s.edits.push_back(del);
    const GeneratedScene scene = generate(s);
    CHECK(scene.frames.size() == 180);
    REQUIRE(scene.edit_log.size() == 1);
    CHECK(scene.edit_log[0].kind == "delete");
    CHECK(scene.edit_log[0].start == 100);
    CHECK(scene.edit_log[0].count == 20);
    for (size_t i = 0; i < scene.frames.size(); ++i)
        CHECK(scene.frames[i].index == static_cast<int64_t>(i));
}

TEST_CASE("generation is deterministic per seed") {
    SceneScript s;
    s.frame_count = 25;
    s.width = 48;
    s.height = 36;
    s.background.kind = "textured";
    s.background.noise_sigma = 2.5;
    s.seed = 777;
    AgentSpec a;
    a.width = 8;
    a.height = 8;
    a.start_x = 3;
    a.start_y = 3;
    a.vel_x = 1.2;
    a.vel_y = 0.4;
    s.agents.push_back(a);

    const GeneratedScene one = generate(s);
    const GeneratedScene two = generate(s);
    REQUIRE(one.frames.size() == two.frames.size());
    for (size_t i = 0; i < one.frames.size(); ++i)
        CHECK(one.frames[i].pixels == two.frames[i].pixels);

    s.seed = 778;
    const GeneratedScene other = generate(s);
    CHECK(one.frames[0].pixels != other.frames[0].pixels);
}

TEST_CASE("agents leaving the frame are rejected") {
    SceneScript s;
    s.frame_count = 50;
    s.width = 64;
    s.height = 48;
    AgentSpec a;
    a.width = 10;
    a.height = 10;
    a.start_x = 30;
    a.start_y = 20;
    a.vel_x = 2.0;  // exits around frame 12
    s.agents.push_back(a);
    CHECK_THROWS_WITH(generate(s), Catch::Contains("bounds"));
}

TEST_CASE("bad edit ranges are rejected") {
    SceneScript s;
    s.frame_count = 10;
    s.width = 16;
    s.height = 16;
    EditSpec e;
    e.kind = "delete";
    e.start = 5;
    e.count = 10;
    s.edits.push_back(e);
    CHECK_THROWS_WITH(generate(s), Catch::Contains("out of bounds"));
}

TEST_CASE("scripts parse from JSON and reject unknown keys") {
    const auto j = nlohmann::json::parse(R"({
        "frames": 40, "fps": 20, "width": 100, "height": 80, "seed": 9,
        "background": {"kind": "textured", "value": 90, "noise_sigma": 1.5, "scroll": [2, 0]},
        "agents": [{"size": [12, 10], "start": [4, 4], "velocity": [1, 0],
                    "start_frame": 2, "end_frame": 30}],
        "edits": [{"kind": "delete", "start": 35, "count": 2}]
    })");
    const SceneScript s = scene_script_from_json(j);
    CHECK(s.frame_count == 40);
    CHECK(s.fps == 20.0);
    CHECK(s.background.scroll_x == 2.0);
    REQUIRE(s.agents.size() == 1);
    CHECK(s.agents[0].end_frame == 30);
    const GeneratedScene scene = generate(s);
    CHECK(scene.frames.size() == 38);

    auto bad = j;
    bad["fames"] = 10;
    CHECK_THROWS_WITH(scene_script_from_json(bad), Catch::Contains("unknown key"));
}

TEST_CASE("a scrolling background pans coherently") {
    SceneScript s;
    s.frame_count = 4;
    s.width = 40;
    s.height = 20;
    s.background.kind = "textured";
    s.background.scroll_x = 3.0;
    s.seed = 12;
    const GeneratedScene scene = generate(s);
    // Frame f shifted by 3 px against frame f+1 (wrapping): interior match.
    const Frame& a = scene.frames[0];
    const Frame& b = scene.frames[1];
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 37; ++x) CHECK(a.at(x + 3, y) == b.at(x, y));
}
