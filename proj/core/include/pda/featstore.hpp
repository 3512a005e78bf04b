#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pda {

/// Provenance tag of a single feature row.
class Label {
public:
    enum class Kind : std::uint8_t { unlabeled, real, known_fake, unknown_fake };

    Label() = default;
    static Label real() { return Label(Kind::real, {}); }
    static Label known_fake() { return Label(Kind::known_fake, {}); }
    static Label unknown_fake(std::string generator) { return Label(Kind::unknown_fake, std::move(generator)); }
    static Label unlabeled() { return Label(); }

    /// Parses "real", "known_fake", "unknown_fake:<id>" or "unlabeled".
    static Label parse(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    const std::string& generator() const noexcept { return generator_; }
    bool is_fake() const noexcept { return kind_ == Kind::known_fake || kind_ == Kind::unknown_fake; }
    std::string to_string() const;

    friend bool operator==(const Label&, const Label&) = default;

private:
    Label(Kind k, std::string g) : kind_(k), generator_(std::move(g)) {}

    Kind kind_ = Kind::unlabeled;
    std::string generator_;
};

/// A single activation vector. Entries are always finite.
class FeatureVector {
public:
    FeatureVector() = default;
    explicit FeatureVector(std::vector<double> values);
    FeatureVector(std::initializer_list<double> values) : FeatureVector(std::vector<double>(values)) {}

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

private:
    std::vector<double> values_;
};

/// Row-major matrix of feature vectors with optional per-row labels.
///
/// Construction does not validate; call validate() or check() for that. All
/// engine entry points check their inputs. Labels are either empty (the set is
/// unlabeled) or exactly one per row; a label list consisting solely of
/// `unlabeled` tags is normalized to empty.
class FeatureSet {
public:
    FeatureSet() = default;
    explicit FeatureSet(std::size_t dim) : dim_(dim) {}
    FeatureSet(std::size_t rows, std::size_t dim, std::vector<double> data,
               std::vector<Label> labels = {});

    static FeatureSet from_rows(const std::vector<std::vector<double>>& rows, std::vector<Label> labels = {});

    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return size() == 0; }

    std::span<const double> row(std::size_t i) const;
    FeatureVector vector(std::size_t i) const;
    std::span<const double> data() const noexcept { return data_; }

    void push_back(const FeatureVector& v, Label label = {});
    void push_back(std::span<const double> v, Label label = {});

    bool has_labels() const noexcept { return !labels_.empty(); }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    Label label(std::size_t i) const { return labels_.empty() ? Label{} : labels_.at(i); }
    void set_labels(std::vector<Label> labels);

    std::string source;
    std::optional<std::int64_t> seed;

    friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
    std::vector<Label> labels_;
};

/// Raw features and their regenerated counterparts, index-aligned.
struct PairedSet {
    FeatureSet raw;
    FeatureSet regenerated;

    /// Throws ValidationError unless counts and dims agree.
    void check() const;
};

struct Finding {
    std::string message;
    std::optional<std::size_t> row;
    std::optional<std::size_t> col;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool ok() const noexcept { return findings.empty(); }
    std::string to_string() const;
};

/// Lists every violated invariant. The stored data of a FeatureSet is
/// rectangular by construction, so row-level dim mismatches can only arise in
/// sets assembled from ragged rows (see validate_rows).
ValidationReport validate(const FeatureSet& set);
ValidationReport validate_rows(const std::vector<std::vector<double>>& rows, std::size_t declared_dim,
                               std::size_t label_count);

/// Throws ValidationError carrying the first finding.
void check(const FeatureSet& set);

/// PDAF v1 container. The numeric payload is float32, so entries must be
/// representable in single precision for a bit-exact round trip.
void save_feature_file(const FeatureSet& set, const std::string& path);
FeatureSet load_feature_file(const std::string& path);

std::string encode_pdaf(const FeatureSet& set);
FeatureSet decode_pdaf(std::string_view bytes);

/// Comma-separated, one vector per line, optional trailing label column.
/// Lossy; intended for interoperability only.
FeatureSet load_feature_csv(const std::string& path);

/// Rounds every entry to the nearest float32, so the set survives PDAF
/// storage unchanged.
FeatureSet round_to_f32(FeatureSet set);

} // namespace pda
