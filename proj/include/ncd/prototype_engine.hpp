#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ncd/embedding_store.hpp"

namespace ncd {

enum class Metric { Cosine, Euclidean };

std::string_view to_string(Metric metric) noexcept;
std::optional<Metric> parse_metric(std::string_view text) noexcept;

/// Upper bound on any distance under `metric` (2 for cosine, +inf otherwise).
double max_distance(Metric metric) noexcept;

enum class BankKind { Base, Novel };

struct Prototype {
    ClassId class_id = 0;
    std::vector<float> vector;
    std::size_t support_count = 1;
};

/// Class prototypes stored as a contiguous row-major matrix, sorted by
/// class id so a first-minimum scan implements lowest-id tie breaking.
class PrototypeBank {
public:
    PrototypeBank(BankKind kind, std::uint32_t dim) : kind_(kind), dim_(dim) {}

    /// Validates unique ids, matching dims, finite vectors, support >= 1.
    static PrototypeBank from_prototypes(BankKind kind, std::uint32_t dim, std::vector<Prototype> prototypes);

    BankKind kind() const noexcept { return kind_; }
    std::uint32_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return class_ids_.size(); }
    bool empty() const noexcept { return class_ids_.empty(); }

    ClassId class_id(std::size_t k) const { return class_ids_[k]; }
    std::span<const ClassId> class_ids() const noexcept { return class_ids_; }
    std::span<const float> vector(std::size_t k) const { return {matrix_.data() + k * dim_, dim_}; }
    std::size_t support_count(std::size_t k) const { return support_counts_[k]; }
    /// Squared L2 norm of prototype k, computed with the dot kernel.
    double squared_norm(std::size_t k) const { return squared_norms_[k]; }
    std::optional<std::size_t> find(ClassId id) const noexcept;

    Prototype prototype(std::size_t k) const;

private:
    BankKind kind_;
    std::uint32_t dim_;
    std::vector<ClassId> class_ids_;
    std::vector<float> matrix_;
    std::vector<std::size_t> support_counts_;
    std::vector<double> squared_norms_;
};

struct DecisionConfig {
    Metric metric = Metric::Cosine;
    /// Distance threshold; the novel branch fires on min base distance > alpha.
    double alpha = 0.0;
};

struct Classification {
    ClassId predicted_class = 0;
    bool routed_novel = false;
    double min_base_dist = 0.0;
    std::optional<double> min_novel_dist;
};

struct NcdDecision {
    bool routed_novel = false;
    double min_base_dist = 0.0;
};

struct Nearest {
    std::size_t index = 0;
    ClassId class_id = 0;
    double distance = 0.0;
};

/// Arithmetic mean per class over the records of `split`. Each class is
/// summed in float64 after sorting its rows lexicographically by feature
/// value, so the result does not depend on record order.
PrototypeBank compute_prototypes(const EmbeddingSet& set, Split split, BankKind kind);

/// Same, restricted to the given row indices (e.g. an episode's support set).
PrototypeBank compute_prototypes(const EmbeddingSet& set, std::span<const std::size_t> rows, BankKind kind);

/// Cosine: 1 - a.b / (|a| |b|) clamped to [0, 2]; Euclidean: |a - b|.
double distance(std::span<const float> a, std::span<const float> b, Metric metric);

/// Cosine distance from precomputed parts; shared by every code path so
/// that all of them round identically.
double cosine_from_parts(double dot, double squared_norm_a, double squared_norm_b) noexcept;

/// A query with its squared norm cached for repeated bank scans.
class Query {
public:
    Query(std::span<const float> feature, Metric metric);

    std::span<const float> feature() const noexcept { return feature_; }
    double squared_norm() const noexcept { return squared_norm_; }
    Metric metric() const noexcept { return metric_; }

    double distance_to(const PrototypeBank& bank, std::size_t k) const;
    /// First minimum over the bank (lowest class id on ties). Bank must be nonempty.
    Nearest nearest(const PrototypeBank& bank) const;

private:
    std::span<const float> feature_;
    double squared_norm_ = 0.0;
    Metric metric_;
};

/// Nearest prototype over the union of both banks.
Classification classify_vanilla(std::span<const float> f, const PrototypeBank& base, const PrototypeBank& novel,
                                const DecisionConfig& cfg);

/// Routes novel iff min base distance > alpha.
NcdDecision ncd_rule(std::span<const float> f, const PrototypeBank& base, const DecisionConfig& cfg);

/// Nearest novel prototype if the rule fires, nearest base prototype otherwise.
Classification classify_ncd(std::span<const float> f, const PrototypeBank& base, const PrototypeBank& novel,
                            const DecisionConfig& cfg);

void validate(const DecisionConfig& cfg);

}  // namespace ncd
