#include "pda/featstore.hpp"

#include "pda/binary_io.hpp"
#include "pda/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace pda {

namespace {

constexpr std::string_view kPdafMagic = "PDAF";
constexpr std::string_view kTrailerMagic = "PDAS";
constexpr std::uint16_t kPdafVersion = 1;
constexpr std::uint16_t kUnlabeledIndex = 0xFFFF;

std::string at(std::size_t row, std::size_t col) {
    std::ostringstream s;
    s << "(" << row << "," << col << ")";
    return s.str();
}

bool all_unlabeled(const std::vector<Label>& labels) {
    return std::all_of(labels.begin(), labels.end(),
                       [](const Label& l) { return l.kind() == Label::Kind::unlabeled; });
}

} // namespace

Label Label::parse(std::string_view text) {
    if (text == "real") return real();
    if (text == "known_fake") return known_fake();
    if (text == "unlabeled" || text.empty()) return unlabeled();
    constexpr std::string_view prefix = "unknown_fake:";
    if (text.starts_with(prefix) && text.size() > prefix.size()) {
        return unknown_fake(std::string(text.substr(prefix.size())));
    }
    throw ValidationError("unrecognized label '" + std::string(text) + "'");
}

std::string Label::to_string() const {
    switch (kind_) {
    case Kind::real: return "real";
    case Kind::known_fake: return "known_fake";
    case Kind::unknown_fake: return "unknown_fake:" + generator_;
    case Kind::unlabeled: break;
    }
    return "unlabeled";
}

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw ValidationError("non-finite value at " + at(0, i));
        }
    }
}

FeatureSet::FeatureSet(std::size_t rows, std::size_t dim, std::vector<double> data, std::vector<Label> labels)
    : dim_(dim), data_(std::move(data)), labels_(std::move(labels)) {
    if (data_.size() != rows * dim) {
        throw ValidationError("feature data holds " + std::to_string(data_.size()) + " values, expected " +
                              std::to_string(rows * dim));
    }
    if (all_unlabeled(labels_)) labels_.clear();
}

FeatureSet FeatureSet::from_rows(const std::vector<std::vector<double>>& rows, std::vector<Label> labels) {
    if (rows.empty()) {
        throw ValidationError("from_rows needs at least one row to infer dim");
    }
    auto report = validate_rows(rows, rows.front().size(), labels.empty() ? rows.size() : labels.size());
    if (!report.ok()) throw ValidationError(report.findings.front().message);
    FeatureSet out(rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.data_.insert(out.data_.end(), rows[i].begin(), rows[i].end());
    }
    out.set_labels(std::move(labels));
    return out;
}

std::span<const double> FeatureSet::row(std::size_t i) const {
    if (i >= size()) throw std::out_of_range("feature row " + std::to_string(i) + " out of range");
    return std::span<const double>(data_).subspan(i * dim_, dim_);
}

FeatureVector FeatureSet::vector(std::size_t i) const {
    auto r = row(i);
    return FeatureVector(std::vector<double>(r.begin(), r.end()));
}

void FeatureSet::push_back(const FeatureVector& v, Label label) { push_back(v.values(), std::move(label)); }

void FeatureSet::push_back(std::span<const double> v, Label label) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) {
        throw ValidationError("dim mismatch at row " + std::to_string(size()) + ": got " + std::to_string(v.size()) +
                              ", expected " + std::to_string(dim_));
    }
    const auto before = size();
    data_.insert(data_.end(), v.begin(), v.end());
    if (label.kind() != Label::Kind::unlabeled || !labels_.empty()) {
        labels_.resize(before, Label{});
        labels_.push_back(std::move(label));
    }
}

void FeatureSet::set_labels(std::vector<Label> labels) {
    labels_ = std::move(labels);
    if (all_unlabeled(labels_)) labels_.clear();
}

void PairedSet::check() const {
    if (raw.size() != regenerated.size()) {
        throw ValidationError("paired set count mismatch: raw " + std::to_string(raw.size()) + ", regenerated " +
                              std::to_string(regenerated.size()));
    }
    if (raw.dim() != regenerated.dim()) {
        throw ValidationError("paired set dim mismatch: raw " + std::to_string(raw.dim()) + ", regenerated " +
                              std::to_string(regenerated.dim()));
    }
}

std::string ValidationReport::to_string() const {
    std::string out;
    for (const auto& f : findings) {
        out += f.message;
        out += '\n';
    }
    return out;
}

ValidationReport validate(const FeatureSet& set) {
    ValidationReport report;
    if (set.dim() == 0) {
        report.findings.push_back({"dim must be positive", {}, {}});
        return report;
    }
    if (set.data().size() % set.dim() != 0) {
        report.findings.push_back({"payload is not a whole number of rows", {}, {}});
    }
    const auto n = set.size();
    for (std::size_t r = 0; r < n; ++r) {
        auto row = set.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!std::isfinite(row[c])) {
                report.findings.push_back({"non-finite value at " + at(r, c), r, c});
            }
        }
    }
    if (set.has_labels() && set.labels().size() != n) {
        report.findings.push_back({"label count mismatch: " + std::to_string(set.labels().size()) + " labels for " +
                                       std::to_string(n) + " vectors",
                                   {}, {}});
    }
    return report;
}

ValidationReport validate_rows(const std::vector<std::vector<double>>& rows, std::size_t declared_dim,
                               std::size_t label_count) {
    ValidationReport report;
    if (declared_dim == 0) {
        report.findings.push_back({"dim must be positive", {}, {}});
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != declared_dim) {
            report.findings.push_back({"dim mismatch at row " + std::to_string(r), r, {}});
            continue;
        }
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (!std::isfinite(rows[r][c])) {
                report.findings.push_back({"non-finite value at " + at(r, c), r, c});
            }
        }
    }
    if (label_count != rows.size()) {
        report.findings.push_back({"label count mismatch: " + std::to_string(label_count) + " labels for " +
                                       std::to_string(rows.size()) + " vectors",
                                   {}, {}});
    }
    return report;
}

void check(const FeatureSet& set) {
    auto report = validate(set);
    if (!report.ok()) throw ValidationError(report.findings.front().message);
}

std::string encode_pdaf(const FeatureSet& set) {
    check(set);
    const auto n = set.size();
    const auto d = set.dim();
    if (d > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("dim exceeds u32 range");

    // String table in first-appearance order.
    std::vector<std::string> table;
    std::map<std::string, std::uint16_t> index_of;
    std::vector<std::uint16_t> row_index(n, kUnlabeledIndex);
    for (std::size_t i = 0; i < n && set.has_labels(); ++i) {
        const auto& label = set.labels()[i];
        if (label.kind() == Label::Kind::unlabeled) continue;
        auto text = label.to_string();
        auto it = index_of.find(text);
        if (it == index_of.end()) {
            if (table.size() >= kUnlabeledIndex) throw ValidationError("too many distinct labels");
            it = index_of.emplace(text, static_cast<std::uint16_t>(table.size())).first;
            table.push_back(text);
        }
        row_index[i] = it->second;
    }
    std::string table_bytes;
    for (const auto& t : table) {
        table_bytes += t;
        table_bytes.push_back('\0');
    }

    io::ByteWriter w;
    w.put_bytes(kPdafMagic);
    w.put_u16(kPdafVersion);
    w.put_u64(n);
    w.put_u32(static_cast<std::uint32_t>(d));
    w.put_u32(static_cast<std::uint32_t>(table_bytes.size()));
    w.put_bytes(table_bytes);
    for (auto idx : row_index) w.put_u16(idx);
    for (double v : set.data()) {
        const auto f = static_cast<float>(v);
        if (!std::isfinite(f)) throw ValidationError("value overflows float32: " + std::to_string(v));
        w.put_f32(f);
    }

    // Optional provenance trailer; readers that stop after the payload ignore it.
    if (!set.source.empty() || set.seed) {
        w.put_bytes(kTrailerMagic);
        w.put_string(set.source);
        w.put_u8(set.seed ? 1 : 0);
        w.put_i64(set.seed.value_or(0));
    }
    return w.take();
}

FeatureSet decode_pdaf(std::string_view bytes) {
    io::ByteReader r(bytes);
    if (bytes.size() < 4 || bytes.substr(0, 4) != kPdafMagic) {
        throw FormatError("unrecognized magic: expected PDAF");
    }
    r.get_bytes(4, "magic");
    const auto version = r.get_u16("version");
    if (version != kPdafVersion) {
        throw FormatError("unsupported PDAF version " + std::to_string(version));
    }
    const auto n = r.get_u64("row count");
    const auto d = r.get_u32("dim");
    if (d == 0) throw FormatError("dim must be positive");
    const auto table_len = r.get_u32("label table length");
    auto table_bytes = r.get_bytes(table_len, "label table");

    std::vector<Label> table;
    std::size_t start = 0;
    while (start < table_bytes.size()) {
        auto end = table_bytes.find('\0', start);
        if (end == std::string_view::npos) end = table_bytes.size();
        table.push_back(Label::parse(table_bytes.substr(start, end - start)));
        start = end + 1;
    }

    if (n > r.remaining() / 2) {
        throw FormatError("truncated label indices: declared n=" + std::to_string(n));
    }
    std::vector<Label> labels;
    labels.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto idx = r.get_u16("label index");
        if (idx == kUnlabeledIndex) {
            labels.emplace_back();
        } else if (idx >= table.size()) {
            throw FormatError("label index " + std::to_string(idx) + " out of table range at row " + std::to_string(i));
        } else {
            labels.push_back(table[idx]);
        }
    }

    const std::uint64_t count = n * d;
    if (d != 0 && count / d != n) throw FormatError("declared n*d overflows");
    const std::uint64_t need = count * 4;
    if (need / 4 != count || need > r.remaining()) {
        throw FormatError("truncated payload: declared n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                          " needs " + std::to_string(need) + " bytes, have " + std::to_string(r.remaining()));
    }
    std::vector<double> data;
    data.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const double v = r.get_f32("payload");
        if (!std::isfinite(v)) {
            throw ValidationError("non-finite value at " + at(i / d, i % d));
        }
        data.push_back(v);
    }

    FeatureSet set(n, d, std::move(data), std::move(labels));
    if (r.remaining() > 0) {
        if (r.get_bytes(kTrailerMagic.size(), "trailer magic") != kTrailerMagic) {
            throw FormatError("unexpected bytes after payload");
        }
        set.source = r.get_string("source");
        const bool has_seed = r.get_u8("seed flag") != 0;
        const auto seed = r.get_i64("seed");
        if (has_seed) set.seed = seed;
        if (r.remaining() > 0) throw FormatError("unexpected bytes after trailer");
    }
    return set;
}

void save_feature_file(const FeatureSet& set, const std::string& path) {
    io::write_file(path, encode_pdaf(set));
}

FeatureSet load_feature_file(const std::string& path) { return decode_pdaf(io::read_file(path)); }

FeatureSet load_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::vector<std::vector<double>> rows;
    std::vector<Label> labels;
    bool any_label = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        Label label;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto& text = cells[c];
            char* end = nullptr;
            const double v = std::strtod(text.c_str(), &end);
            const char* tail = end;
            const bool numeric = tail != text.c_str() && std::all_of(tail, text.c_str() + text.size(), [](char ch) {
                return std::isspace(static_cast<unsigned char>(ch)) != 0;
            });
            if (numeric) {
                row.push_back(v);
            } else if (c + 1 == cells.size()) {
                label = Label::parse(text);
                any_label = true;
            } else {
                throw FormatError("non-numeric cell at line " + std::to_string(line_no) + ", column " +
                                  std::to_string(c + 1));
            }
        }
        rows.push_back(std::move(row));
        labels.push_back(std::move(label));
    }
    if (rows.empty()) throw FormatError("CSV file '" + path + "' holds no rows");
    if (!any_label) labels.clear();
    auto set = FeatureSet::from_rows(rows, std::move(labels));
    set.source = path;
    return set;
}

FeatureSet round_to_f32(FeatureSet set) {
    std::vector<double> data(set.data().begin(), set.data().end());
    for (auto& v : data) v = static_cast<double>(static_cast<float>(v));
    FeatureSet out(set.size(), set.dim(), std::move(data), set.labels());
    out.source = std::move(set.source);
    out.seed = set.seed;
    return out;
}

} // namespace pda
