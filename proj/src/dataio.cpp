#include "colondef/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "colondef/errors.hpp"

namespace colondef {

namespace {

constexpr const char* kSequenceMagic = "colondef-sequence";
constexpr const char* kModelMagic = "colondef-model";
constexpr const char* kPointsMagic = "colondef-points";

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

/// Line source that tracks 1-based line numbers.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    /// Next non-blank line split into tokens; nullopt at end of input.
    std::optional<std::vector<std::string_view>> next() {
        while (std::getline(in_, line_)) {
            ++number_;
            auto tokens = split(line_);
            if (!tokens.empty()) return tokens;
        }
        return std::nullopt;
    }

    std::vector<std::string_view> require(const char* what) {
        auto t = next();
        if (!t) throw ParseError(std::string("unexpected end of file, expected ") + what, number_ + 1);
        return *t;
    }

    /// Rest of the current line after its first token.
    std::string remainder_after_first_token() const {
        const auto pos = line_.find_first_not_of(" \t");
        const auto gap = line_.find_first_of(" \t", pos);
        if (gap == std::string::npos) return {};
        const auto rest = line_.find_first_not_of(" \t", gap);
        return rest == std::string::npos ? std::string() : line_.substr(rest);
    }

    std::size_t line() const { return number_; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, number_); }

private:
    std::istream& in_;
    std::string line_;
    std::size_t number_ = 0;
};

template <class T>
T parse_integer(const LineReader& r, std::string_view text, const char* what) {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) r.fail(std::string("invalid ") + what + " '" + std::string(text) + "'");
    return v;
}

double parse_real_or_fail(const LineReader& r, std::string_view text, const char* what) {
    const auto v = parse_real(text);
    if (!v) r.fail(std::string("invalid ") + what + " '" + std::string(text) + "'");
    return *v;
}

/// Checks `key value...` with an exact token count.
const std::vector<std::string_view>& expect_key(const LineReader& r, const std::vector<std::string_view>& t,
                                                const char* key, std::size_t count) {
    if (t[0] != key) r.fail(std::string("expected '") + key + "' record, found '" + std::string(t[0]) + "'");
    if (t.size() != count) r.fail(std::string("'") + key + "' record has " + std::to_string(t.size()) + " fields, expected " + std::to_string(count));
    return t;
}

void check_header(LineReader& r, const char* magic, int supported) {
    const auto t = r.require("header");
    if (t[0] != magic || t.size() != 2) r.fail(std::string("not a ") + magic + " file");
    const int version = parse_integer<int>(r, t[1], "format version");
    if (version != supported) {
        throw UnsupportedVersion(std::string(magic) + " version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(supported) + ")");
    }
}

void expect_end(LineReader& r) {
    const auto t = r.require("'end'");
    if (t.size() != 1 || t[0] != "end") r.fail("expected 'end'");
    if (r.next()) r.fail("content after 'end'");
}

void write_point(std::ostream& out, const Point3& p) {
    out << ' ' << format_real(p.x()) << ' ' << format_real(p.y()) << ' ' << format_real(p.z());
}

PointList read_points(const LineReader& r, std::span<const std::string_view> tokens, const char* what) {
    PointList pts;
    pts.reserve(tokens.size() / 3);
    for (std::size_t i = 0; i + 2 < tokens.size(); i += 3) {
        pts.emplace_back(parse_real_or_fail(r, tokens[i], what), parse_real_or_fail(r, tokens[i + 1], what),
                         parse_real_or_fail(r, tokens[i + 2], what));
    }
    return pts;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

bool valid_token(const std::string& s) {
    return !s.empty() && s.find_first_of(" \t\r\n") == std::string::npos;
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::optional<double> parse_real(std::string_view text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// ---------------------------------------------------------------------------
// Sequences

void write_sequence(std::ostream& out, const InsertionSequence& seq, const std::optional<std::string>& simulator) {
    check_sequence_invariants(seq);
    if (!valid_token(seq.id)) throw InvalidInput("save_sequence: id must be a non-empty token without whitespace");
    if (simulator && simulator->find('\n') != std::string::npos) {
        throw InvalidInput("save_sequence: simulator echo must be a single line");
    }
    out << kSequenceMagic << ' ' << kSequenceFormatVersion << '\n';
    out << "id " << seq.id << '\n';
    out << "frame_rate " << format_real(seq.frame_rate) << '\n';
    out << "scope_points " << seq.scope_points() << '\n';
    out << "markers " << seq.markers() << '\n';
    out << "units mm\n";
    if (simulator) out << "simulator " << *simulator << '\n';
    out << "frames " << seq.frames.size() << '\n';
    for (const auto& f : seq.frames) {
        out << "frame " << f.index << ' ' << format_real(f.timestamp) << " scope";
        for (const auto& p : f.scope.points()) write_point(out, p);
        if (f.colon) {
            out << " colon";
            for (const auto& p : f.colon->points()) write_point(out, p);
        }
        out << '\n';
    }
    out << "end\n";
}

SequenceFile read_sequence(std::istream& in) {
    LineReader r(in);
    check_header(r, kSequenceMagic, kSequenceFormatVersion);

    SequenceFile file;
    InsertionSequence& seq = file.sequence;
    seq.id = std::string(expect_key(r, r.require("id"), "id", 2)[1]);
    seq.frame_rate = parse_real_or_fail(r, expect_key(r, r.require("frame_rate"), "frame_rate", 2)[1], "frame rate");
    if (!(seq.frame_rate > 0.0)) r.fail("frame rate must be positive");
    const auto n = parse_integer<std::size_t>(r, expect_key(r, r.require("scope_points"), "scope_points", 2)[1], "scope point count");
    const auto m = parse_integer<std::size_t>(r, expect_key(r, r.require("markers"), "markers", 2)[1], "marker count");
    if (n == 0) r.fail("scope point count must be positive");
    const auto units = expect_key(r, r.require("units"), "units", 2);
    if (units[1] != "mm") r.fail("unsupported units '" + std::string(units[1]) + "'");

    auto t = r.require("frames");
    if (t[0] == "simulator") {
        file.simulator = r.remainder_after_first_token();
        t = r.require("frames");
    }
    const auto count = parse_integer<std::size_t>(r, expect_key(r, t, "frames", 2)[1], "frame count");
    if (count == 0) r.fail("sequence has no frames");

    const std::size_t scope_fields = 4 + 3 * n;
    const std::size_t full_fields = scope_fields + 1 + 3 * m;
    seq.frames.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto rec = r.next();
        if (!rec) {
            throw ParseError("truncated file: " + std::to_string(k) + " of " + std::to_string(count) + " frames present",
                             r.line() + 1);
        }
        const auto& f = *rec;
        const std::string where = "frame " + std::to_string(k) + ": ";
        if (f[0] != "frame") r.fail(where + "expected 'frame' record");
        if (f.size() < 4 || f[3] != "scope") r.fail(where + "missing scope block");
        const bool has_colon = f.size() > scope_fields;
        if (f.size() != scope_fields && !(m > 0 && f.size() == full_fields)) {
            r.fail(where + "has " + std::to_string(f.size()) + " fields, expected " + std::to_string(scope_fields) +
                   (m > 0 ? " or " + std::to_string(full_fields) : std::string()) + " for N=" + std::to_string(n) +
                   ", M=" + std::to_string(m));
        }
        if (has_colon && f[scope_fields] != "colon") r.fail(where + "missing colon block marker");

        Frame frame;
        frame.index = parse_integer<std::size_t>(r, f[1], "frame index");
        frame.timestamp = parse_real_or_fail(r, f[2], "timestamp");
        if (!seq.frames.empty() && !(frame.timestamp > seq.frames.back().timestamp)) {
            r.fail(where + "timestamp not strictly increasing");
        }
        frame.scope = ScopeShape(read_points(r, std::span(f).subspan(4, 3 * n), "scope coordinate"));
        if (has_colon) frame.colon = ColonShape(read_points(r, std::span(f).subspan(scope_fields + 1, 3 * m), "marker coordinate"));
        seq.frames.push_back(std::move(frame));
    }
    expect_end(r);
    return file;
}

void save_sequence(const std::filesystem::path& path, const InsertionSequence& seq,
                   const std::optional<std::string>& simulator) {
    std::ostringstream buffer;
    write_sequence(buffer, seq, simulator);
    auto out = open_out(path);
    out << buffer.str();
    finish(out, path);
}

SequenceFile load_sequence_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return read_sequence(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.detail(), e.record());
    }
}

InsertionSequence load_sequence(const std::filesystem::path& path) { return load_sequence_file(path).sequence; }

// ---------------------------------------------------------------------------
// Models

void write_model(std::ostream& out, const ShapeRegressor& model) {
    const auto& meta = model.metadata();
    for (const auto& id : meta.sequence_ids) {
        if (!valid_token(id)) throw InvalidInput("save_model: sequence id '" + id + "' is not a single token");
    }
    out << kModelMagic << ' ' << kModelFormatVersion << '\n';
    out << "scope_points " << model.scope_points() << '\n';
    out << "markers " << model.markers() << '\n';
    out << "center_features " << (model.feature_options().center ? 1 : 0) << '\n';
    out << "seed " << meta.seed << '\n';
    out << "training_frames " << meta.training_frames << '\n';
    out << "sequences " << meta.sequence_ids.size();
    for (const auto& id : meta.sequence_ids) out << ' ' << id;
    out << '\n';
    out << "baseline";
    for (const auto& p : meta.marker_means) write_point(out, p);
    out << '\n';
    for (std::size_t m = 0; m < model.markers(); ++m) {
        const Forest& forest = model.forests()[m];
        const ForestParams& p = forest.params();
        out << "forest " << m << " feature_dim " << forest.feature_dim() << " n_trees " << forest.trees().size()
            << " max_depth " << (p.max_depth ? std::to_string(*p.max_depth) : "none") << " min_samples_leaf "
            << p.min_samples_leaf << " mtry " << (p.mtry ? std::to_string(*p.mtry) : "auto") << " bootstrap "
            << (p.bootstrap ? 1 : 0) << " seed " << p.seed << '\n';
        for (std::size_t t = 0; t < forest.trees().size(); ++t) {
            const auto& nodes = forest.trees()[t].nodes();
            out << "tree " << t << " nodes " << nodes.size() << '\n';
            for (const auto& node : nodes) {
                if (const auto* s = std::get_if<SplitNode>(&node)) {
                    out << "S " << s->feature << ' ' << format_real(s->threshold) << '\n';
                } else {
                    const auto& leaf = std::get<LeafNode>(node);
                    out << 'L';
                    write_point(out, leaf.mean);
                    out << ' ' << leaf.n_samples << '\n';
                }
            }
        }
    }
    out << "end\n";
}

namespace {

// Rebuilds child links of a pre-order node list in which children are
// implicit. Every split takes the next subtree as its left child and the one
// after as its right child.
std::vector<TreeNode> link_preorder(std::vector<TreeNode> nodes) {
    if (nodes.empty()) throw StructuralIntegrity("tree has no nodes");
    struct Open {
        std::size_t index;
        bool has_left;
    };
    std::vector<Open> open;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i > 0) {
            if (open.empty()) throw StructuralIntegrity("node " + std::to_string(i) + " is not reachable from the root");
            Open& top = open.back();
            auto& parent = std::get<SplitNode>(nodes[top.index]);
            if (!top.has_left) {
                parent.left = static_cast<std::uint32_t>(i);
                top.has_left = true;
            } else {
                parent.right = static_cast<std::uint32_t>(i);
                open.pop_back();
            }
        }
        if (std::holds_alternative<SplitNode>(nodes[i])) open.push_back({i, false});
    }
    if (!open.empty()) throw StructuralIntegrity("node list ends before every split has two children");
    return nodes;
}

}  // namespace

ShapeRegressor read_model(std::istream& in) {
    LineReader r(in);
    check_header(r, kModelMagic, kModelFormatVersion);
    const auto n = parse_integer<std::size_t>(r, expect_key(r, r.require("scope_points"), "scope_points", 2)[1], "scope point count");
    const auto m = parse_integer<std::size_t>(r, expect_key(r, r.require("markers"), "markers", 2)[1], "marker count");
    const auto center = parse_integer<int>(r, expect_key(r, r.require("center_features"), "center_features", 2)[1], "flag");
    if (center != 0 && center != 1) r.fail("center_features must be 0 or 1");

    RegressorMetadata meta;
    meta.seed = parse_integer<std::uint64_t>(r, expect_key(r, r.require("seed"), "seed", 2)[1], "seed");
    meta.training_frames =
        parse_integer<std::size_t>(r, expect_key(r, r.require("training_frames"), "training_frames", 2)[1], "frame count");
    {
        const auto t = r.require("sequences");
        if (t[0] != "sequences" || t.size() < 2) r.fail("expected 'sequences' record");
        const auto k = parse_integer<std::size_t>(r, t[1], "sequence count");
        if (t.size() != k + 2) r.fail("sequence id count does not match");
        for (std::size_t i = 0; i < k; ++i) meta.sequence_ids.emplace_back(t[i + 2]);
    }
    {
        const auto t = expect_key(r, r.require("baseline"), "baseline", 1 + 3 * m);
        meta.marker_means = read_points(r, std::span(t).subspan(1), "baseline coordinate");
    }

    std::vector<Forest> forests;
    for (std::size_t fi = 0; fi < m; ++fi) {
        const auto t = expect_key(r, r.require("forest"), "forest", 16);
        if (parse_integer<std::size_t>(r, t[1], "forest index") != fi) r.fail("forest records out of order");
        if (t[2] != "feature_dim" || t[4] != "n_trees" || t[6] != "max_depth" || t[8] != "min_samples_leaf" ||
            t[10] != "mtry" || t[12] != "bootstrap" || t[14] != "seed") {
            r.fail("malformed forest record");
        }
        const auto dim = parse_integer<std::size_t>(r, t[3], "feature dimension");
        const auto n_trees = parse_integer<std::size_t>(r, t[5], "tree count");
        ForestParams p;
        p.n_trees = n_trees;
        if (t[7] != "none") p.max_depth = parse_integer<std::size_t>(r, t[7], "max depth");
        p.min_samples_leaf = parse_integer<std::size_t>(r, t[9], "leaf size");
        if (t[11] != "auto") p.mtry = parse_integer<std::size_t>(r, t[11], "mtry");
        const auto bootstrap = parse_integer<int>(r, t[13], "bootstrap flag");
        if (bootstrap != 0 && bootstrap != 1) r.fail("bootstrap must be 0 or 1");
        p.bootstrap = bootstrap == 1;
        p.seed = parse_integer<std::uint64_t>(r, t[15], "seed");
        if (n_trees == 0) throw StructuralIntegrity("forest " + std::to_string(fi) + " has no trees");

        std::vector<Tree> trees;
        trees.reserve(n_trees);
        for (std::size_t ti = 0; ti < n_trees; ++ti) {
            const auto h = expect_key(r, r.require("tree"), "tree", 4);
            if (parse_integer<std::size_t>(r, h[1], "tree index") != ti || h[2] != "nodes") r.fail("malformed tree record");
            const auto count = parse_integer<std::size_t>(r, h[3], "node count");
            if (count == 0) throw StructuralIntegrity("forest " + std::to_string(fi) + " tree " + std::to_string(ti) + " is empty");
            std::vector<TreeNode> nodes;
            nodes.reserve(count);
            for (std::size_t k = 0; k < count; ++k) {
                const auto nd = r.next();
                if (!nd) throw StructuralIntegrity("node list truncated in forest " + std::to_string(fi) + " tree " + std::to_string(ti));
                const auto& v = *nd;
                if (v[0] == "S" && v.size() == 3) {
                    nodes.push_back(SplitNode{parse_integer<std::size_t>(r, v[1], "feature index"),
                                              parse_real_or_fail(r, v[2], "threshold"), 0, 0});
                } else if (v[0] == "L" && v.size() == 5) {
                    const auto pts = read_points(r, std::span(v).subspan(1, 3), "leaf coordinate");
                    nodes.push_back(LeafNode{pts[0], parse_integer<std::size_t>(r, v[4], "leaf size")});
                } else {
                    throw StructuralIntegrity("line " + std::to_string(r.line()) + ": expected a node record");
                }
            }
            try {
                trees.emplace_back(link_preorder(std::move(nodes)));
            } catch (const StructuralIntegrity& e) {
                throw StructuralIntegrity("forest " + std::to_string(fi) + " tree " + std::to_string(ti) + ": " + e.what());
            }
        }
        try {
            forests.emplace_back(p, dim, std::move(trees));
        } catch (const InvalidInput& e) {
            throw StructuralIntegrity(e.what());
        }
    }
    expect_end(r);
    try {
        return ShapeRegressor(std::move(forests), n, FeatureOptions{center == 1}, std::move(meta));
    } catch (const InvalidInput& e) {
        throw StructuralIntegrity(e.what());
    }
}

void save_model(const std::filesystem::path& path, const ShapeRegressor& model) {
    std::ostringstream buffer;
    write_model(buffer, model);
    auto out = open_out(path);
    out << buffer.str();
    finish(out, path);
}

ShapeRegressor load_model(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return read_model(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.detail(), e.record());
    }
}

// ---------------------------------------------------------------------------
// Point lists

void save_points(const std::filesystem::path& path, std::span<const Point3> pts) {
    if (!all_finite(pts)) throw InvalidInput("save_points: non-finite point");
    auto out = open_out(path);
    out << kPointsMagic << ' ' << kPointsFormatVersion << '\n' << "count " << pts.size() << '\n';
    for (const auto& p : pts) {
        out << format_real(p.x()) << ' ' << format_real(p.y()) << ' ' << format_real(p.z()) << '\n';
    }
    out << "end\n";
    finish(out, path);
}

PointList load_points(const std::filesystem::path& path) {
    auto in = open_in(path);
    LineReader r(in);
    check_header(r, kPointsMagic, kPointsFormatVersion);
    const auto count = parse_integer<std::size_t>(r, expect_key(r, r.require("count"), "count", 2)[1], "point count");
    PointList pts;
    for (std::size_t i = 0; i < count; ++i) {
        const auto t = r.require("point");
        if (t.size() != 3) r.fail("point record needs 3 coordinates");
        pts.push_back(read_points(r, t, "coordinate")[0]);
    }
    expect_end(r);
    return pts;
}

// ---------------------------------------------------------------------------
// Estimate export

const char* role_name(EstimateRole role) {
    switch (role) {
        case EstimateRole::Scope: return "scope";
        case EstimateRole::Estimate: return "estimate";
        case EstimateRole::Truth: return "truth";
    }
    return "?";
}

void write_estimates(std::ostream& out, std::span<const EstimateFrame> frames) {
    out << "role,frame,point,x,y,z\n";
    auto rows = [&](EstimateRole role, std::size_t frame, const PointList& pts) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out << role_name(role) << ',' << frame << ',' << i << ',' << format_real(pts[i].x()) << ','
                << format_real(pts[i].y()) << ',' << format_real(pts[i].z()) << '\n';
        }
    };
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const auto& f = frames[k];
        if (f.truth && f.truth->size() != f.estimate.size()) {
            throw InvalidInput("export_estimates: frame " + std::to_string(k) + " truth and estimate sizes differ");
        }
        rows(EstimateRole::Scope, k, f.scope.points());
        rows(EstimateRole::Estimate, k, f.estimate.points());
        if (f.truth) rows(EstimateRole::Truth, k, f.truth->points());
    }
}

void export_estimates(const std::filesystem::path& path, std::span<const EstimateFrame> frames) {
    std::ostringstream buffer;
    write_estimates(buffer, frames);
    auto out = open_out(path);
    out << buffer.str();
    finish(out, path);
}

std::vector<EstimateRow> load_estimates(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    std::size_t number = 0;
    std::vector<EstimateRow> rows;
    while (std::getline(in, line)) {
        ++number;
        if (number == 1) {
            if (line != "role,frame,point,x,y,z") throw ParseError("unexpected estimates header", number);
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cells.size() != 6) throw ParseError("estimate row needs 6 cells", number);
        EstimateRow row{};
        if (cells[0] == "scope") {
            row.role = EstimateRole::Scope;
        } else if (cells[0] == "estimate") {
            row.role = EstimateRole::Estimate;
        } else if (cells[0] == "truth") {
            row.role = EstimateRole::Truth;
        } else {
            throw ParseError("unknown role '" + std::string(cells[0]) + "'", number);
        }
        auto integer = [&](std::string_view s) {
            std::size_t v = 0;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("invalid index", number);
            return v;
        };
        auto real = [&](std::string_view s) {
            const auto v = parse_real(s);
            if (!v) throw ParseError("invalid coordinate", number);
            return *v;
        };
        row.frame = integer(cells[1]);
        row.point = integer(cells[2]);
        row.position = Point3(real(cells[3]), real(cells[4]), real(cells[5]));
        rows.push_back(row);
    }
    if (number == 0) throw ParseError("empty estimates file", 1);
    return rows;
}

}  // namespace colondef
