#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "trackmill/manifest.hpp"
#include "trackmill/oracle.hpp"

using namespace trackmill;
using testutil::make_tracklet;
using testutil::tmp_path;

TEST_CASE("empty manifest file loads as an empty dataset") {
    auto path = tmp_path("empty.jsonl");
    std::ofstream(path).close();
    Dataset ds = load_manifest(path);
    CHECK(ds.n_tracklets() == 0);
    CHECK(ds.n_frames() == 0);
}

TEST_CASE("single tracklet with one identity") {
    Dataset ds;
    ds.tracklets.push_back(make_tracklet("t0", 0, {7, 7, 7}));
    auto path = tmp_path("single.jsonl");
    save_manifest(ds, path);
    Dataset back = load_manifest(path);
    CHECK(back.n_tracklets() == 1);
    CHECK(back.n_ids() == 1);
    CHECK(back.tracklets[0].frames[0].gt_pid == 7);
}

TEST_CASE("zero-tracklet dataset saves as a header-only file") {
    Dataset ds;
    auto path = tmp_path("header_only.jsonl");
    save_manifest(ds, path);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1);
    CHECK(load_manifest(path).n_tracklets() == 0);
}

TEST_CASE("round trip preserves a random embedded dataset bit for bit") {
    Dataset ds = embed_dataset(make_clean_dataset(25, 2, 4, 6, 11), OracleConfig{16, 0.2, 0.1, 0.05, 3});
    for (auto storage : {EmbeddingStorage::inline_json, EmbeddingStorage::sidecar}) {
        auto path = tmp_path(storage == EmbeddingStorage::sidecar ? "rt_sc.jsonl" : "rt_in.jsonl");
        save_manifest(ds, path, storage);
        CHECK(load_manifest(path) == ds);
    }
}

TEST_CASE("round trip of a 100-tracklet unembedded dataset") {
    Dataset ds = make_clean_dataset(50, 2, 3, 5, 4);
    REQUIRE(ds.n_tracklets() == 100);
    auto path = tmp_path("rt_plain.jsonl");
    save_manifest(ds, path);
    CHECK(load_manifest(path) == ds);
}

TEST_CASE("missing gt_pid round-trips as absent") {
    Dataset ds;
    Tracklet t = make_tracklet("t0", 1, {5, 5});
    t.frames[1].gt_pid.reset();
    ds.tracklets.push_back(t);
    auto path = tmp_path("nulls.jsonl");
    save_manifest(ds, path);
    Dataset back = load_manifest(path);
    CHECK(back.tracklets[0].frames[0].gt_pid == 5);
    CHECK(!back.tracklets[0].frames[1].gt_pid);
    CHECK(back == ds);
}

TEST_CASE("duplicate (tracklet, seq) is rejected with the line number") {
    auto path = tmp_path("dup.jsonl");
    {
        std::ofstream out(path);
        out << R"({"format":"trackmill.manifest","version":1,"sidecar":false,"dim":null})" << "\n";
        out << R"({"t":"a","s":0,"pid":1,"cam":0,"emb":null,"img":"x"})" << "\n";
        out << R"({"t":"a","s":0,"pid":1,"cam":0,"emb":null,"img":"y"})" << "\n";
    }
    try {
        load_manifest(path);
        FAIL("expected an integrity error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::integrity);
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
}

TEST_CASE("malformed header is a parse error") {
    auto path = tmp_path("badheader.jsonl");
    std::ofstream(path) << "{\"format\":\"something-else\"}\n";
    CHECK_THROWS_AS(load_manifest(path), Error);
}

TEST_CASE("missing file is an io error") {
    try {
        load_manifest(tmp_path("does_not_exist.jsonl"));
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
}

TEST_CASE("validation rejects non-dense seq and mixed cameras") {
    Dataset ds;
    ds.tracklets.push_back(make_tracklet("t0", 0, {1, 1}));
    ds.tracklets[0].frames[1].seq = 5;
    CHECK_THROWS_AS(ds.validate(), Error);

    Dataset ds2;
    ds2.tracklets.push_back(make_tracklet("t0", 0, {1, 1}));
    ds2.tracklets[0].frames[1].camera_id = 3;
    CHECK_THROWS_AS(ds2.validate(), Error);
}
