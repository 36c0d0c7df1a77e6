#include <doctest.h>

#include <bit>
#include <fstream>
#include <limits>
#include <sstream>

#include "colondef/dataio.hpp"
#include "colondef/errors.hpp"
#include "support.hpp"

using namespace colondef;

namespace {

std::string sequence_text(const InsertionSequence& seq, const std::optional<std::string>& echo = std::nullopt) {
    std::ostringstream out;
    write_sequence(out, seq, echo);
    return out.str();
}

SequenceFile parse_sequence(const std::string& text) {
    std::istringstream in(text);
    return read_sequence(in);
}

ShapeRegressor parse_model(const std::string& text) {
    std::istringstream in(text);
    return read_model(in);
}

std::string replace_line(const std::string& text, std::size_t line, const std::string& with) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string l;
    for (std::size_t i = 1; std::getline(in, l); ++i) out << (i == line ? with : l) << '\n';
    return out.str();
}

std::size_t line_of(const std::string& text, const std::string& prefix) {
    std::istringstream in(text);
    std::string l;
    for (std::size_t i = 1; std::getline(in, l); ++i) {
        if (l.rfind(prefix, 0) == 0) return i;
    }
    return 0;
}

const ShapeRegressor& model() {
    static const ShapeRegressor m = [] {
        EstimatorConfig c;
        c.forest.n_trees = 5;
        c.forest.max_depth = 4;
        c.forest.seed = 3;
        c.threads = 1;
        const std::vector<InsertionSequence> train{testing::short_insertion(1, 40), testing::short_insertion(2, 40)};
        return train_shape_regressor(train, c);
    }();
    return m;
}

}  // namespace

TEST_CASE("format_real round-trips bitwise") {
    CounterRng rng(1);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::bit_cast<double>(rng.next());
        if (!std::isfinite(v)) continue;
        const auto back = parse_real(format_real(v));
        REQUIRE(back);
        CHECK(std::bit_cast<std::uint64_t>(*back) == std::bit_cast<std::uint64_t>(v));
    }
    for (double v : {0.0, -0.0, 1e-310, -1.5, 1519.0312, std::numeric_limits<double>::max()}) {
        CHECK(std::bit_cast<std::uint64_t>(*parse_real(format_real(v))) == std::bit_cast<std::uint64_t>(v));
    }
    CHECK(!parse_real("nan"));
    CHECK(!parse_real("inf"));
    CHECK(!parse_real("1.0x"));
    CHECK(!parse_real(""));
}

TEST_CASE("sequence round-trip") {
    auto seq = testing::short_insertion(4, 25);
    const auto file = parse_sequence(sequence_text(seq, std::string(R"({"a":1})")));
    CHECK(file.sequence == seq);
    CHECK(file.simulator == std::string(R"({"a":1})"));

    seq.frames[3].colon.reset();
    seq.id = "no-echo";
    const auto partial = parse_sequence(sequence_text(seq));
    CHECK(partial.sequence == seq);
    CHECK(!partial.simulator);

    const auto dir = testing::temp_dir("dataio-seq");
    save_sequence(dir / "a.seq", seq);
    CHECK(load_sequence(dir / "a.seq") == seq);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sequence parse errors") {
    const auto seq = testing::short_insertion(4, 5);
    const std::string text = sequence_text(seq);

    CHECK_THROWS_AS(parse_sequence("not-a-sequence 1\n"), ParseError);
    CHECK_THROWS_AS(parse_sequence(replace_line(text, 1, "colondef-sequence 2")), UnsupportedVersion);
    CHECK_THROWS_AS(parse_sequence(""), ParseError);

    // Truncated after the third frame line.
    const std::size_t first_frame = line_of(text, "frame ");
    std::istringstream in(text);
    std::string truncated, l;
    for (std::size_t i = 1; i < first_frame + 3 && std::getline(in, l); ++i) truncated += l + "\n";
    try {
        parse_sequence(truncated);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.record() == first_frame + 3);
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }

    // A frame with a missing coordinate.
    std::string frame_line;
    {
        std::istringstream in2(text);
        for (std::size_t i = 1; std::getline(in2, l); ++i) {
            if (i == first_frame + 1) frame_line = l;
        }
    }
    const auto short_frame = frame_line.substr(0, frame_line.rfind(' '));
    try {
        parse_sequence(replace_line(text, first_frame + 1, short_frame));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.record() == first_frame + 1);
        CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_sequence(replace_line(text, first_frame, frame_line)), ParseError);
    CHECK_THROWS_AS(parse_sequence(replace_line(text, line_of(text, "units"), "units cm")), ParseError);
    CHECK_THROWS_AS(parse_sequence(text + "frame 9\n"), ParseError);
    std::string bad_number = frame_line;
    bad_number.replace(bad_number.find(" scope ") + 7, 1, "x");
    CHECK_THROWS_AS(parse_sequence(replace_line(text, first_frame + 1, bad_number)), ParseError);
}

TEST_CASE("save_sequence rejects invalid sequences") {
    auto seq = testing::short_insertion(4, 5);
    seq.id = "has space";
    CHECK_THROWS_AS(sequence_text(seq), InvalidInput);
    seq.id = "ok";
    seq.frames[2].timestamp = 0.0;
    CHECK_THROWS_AS(sequence_text(seq), InvalidInput);
    CHECK_THROWS_AS(save_sequence("/nonexistent-dir/x.seq", testing::short_insertion(4, 5)), IoError);
    CHECK_THROWS_AS(load_sequence("/nonexistent-dir/x.seq"), IoError);
}

TEST_CASE("model round-trip preserves every prediction") {
    std::ostringstream out;
    write_model(out, model());
    const auto back = parse_model(out.str());
    CHECK(back == model());
    CounterRng rng(8);
    for (int i = 0; i < 100; ++i) {
        PointList pts;
        for (std::size_t k = 0; k < 6; ++k) pts.push_back(testing::gaussian_point(rng, 300.0));
        const ScopeShape s(pts);
        CHECK(estimate_colon_shape(back, s) == estimate_colon_shape(model(), s));
    }
    std::ostringstream again;
    write_model(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("model structural errors") {
    std::ostringstream out;
    write_model(out, model());
    const std::string text = out.str();
    const std::size_t tree_line = line_of(text, "tree 0 nodes ");
    REQUIRE(tree_line > 0);

    CHECK_THROWS_AS(parse_model(replace_line(text, 1, "colondef-model 9")), UnsupportedVersion);
    CHECK_THROWS_AS(parse_model(replace_line(text, tree_line, "tree 0 nodes 0")), StructuralIntegrity);
    // The first node turned into a leaf leaves orphans behind.
    CHECK_THROWS_AS(parse_model(replace_line(text, tree_line + 1, "L 1 2 3 4")), StructuralIntegrity);
    // A split whose feature index is out of range.
    CHECK_THROWS_AS(parse_model(replace_line(text, tree_line + 1, "S 99 0.5")), StructuralIntegrity);
    CHECK_THROWS_AS(parse_model(replace_line(text, tree_line + 1, "Q 1 2")), StructuralIntegrity);
    CHECK_THROWS_AS(parse_model(replace_line(text, tree_line + 1, "S 1 abc")), ParseError);
    CHECK_THROWS_AS(parse_model(text.substr(0, text.size() / 2)), Error);
}

TEST_CASE("point file round-trip") {
    const auto dir = testing::temp_dir("dataio-points");
    const auto pts = testing::random_points(3, 17);
    save_points(dir / "p.pts", pts);
    CHECK(load_points(dir / "p.pts") == pts);
    {
        std::ofstream(dir / "bad.pts") << "colondef-points 1\ncount 2\n1 2 3\nend\n";
    }
    CHECK_THROWS_AS(load_points(dir / "bad.pts"), ParseError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("estimate export") {
    const auto dir = testing::temp_dir("dataio-est");
    const auto seq = testing::short_insertion(5, 4);
    std::vector<EstimateFrame> frames;
    for (const auto& f : seq.frames) frames.push_back({f.scope, *f.colon, f.colon});
    frames[1].truth.reset();
    export_estimates(dir / "e.csv", frames);
    const auto rows = load_estimates(dir / "e.csv");
    CHECK(rows.size() == 4 * 6 + 4 * 12 + 3 * 12);
    std::size_t k = 0;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        for (std::size_t i = 0; i < 6; ++i, ++k) {
            CHECK(rows[k].role == EstimateRole::Scope);
            CHECK(rows[k].frame == t);
            CHECK(rows[k].point == i);
            CHECK(rows[k].position == frames[t].scope[i]);
        }
        for (std::size_t m = 0; m < 12; ++m, ++k) CHECK(rows[k].role == EstimateRole::Estimate);
        if (frames[t].truth) {
            for (std::size_t m = 0; m < 12; ++m, ++k) {
                CHECK(rows[k].role == EstimateRole::Truth);
                CHECK(rows[k].position == (*frames[t].truth)[m]);
            }
        }
    }
    {
        std::ofstream(dir / "bad.csv") << "role,frame,point,x,y,z\nghost,0,0,1,2,3\n";
    }
    CHECK_THROWS_AS(load_estimates(dir / "bad.csv"), ParseError);
    std::filesystem::remove_all(dir);
}
