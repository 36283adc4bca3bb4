#include "ncd/prototype_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "ncd/error.hpp"
#include "ncd/simd.hpp"

namespace ncd {

std::string_view to_string(Metric metric) noexcept {
    return metric == Metric::Cosine ? "cosine" : "euclidean";
}

std::optional<Metric> parse_metric(std::string_view text) noexcept {
    if (text == "cosine") return Metric::Cosine;
    if (text == "euclidean") return Metric::Euclidean;
    return std::nullopt;
}

double max_distance(Metric metric) noexcept {
    return metric == Metric::Cosine ? 2.0 : std::numeric_limits<double>::infinity();
}

PrototypeBank PrototypeBank::from_prototypes(BankKind kind, std::uint32_t dim, std::vector<Prototype> prototypes) {
    if (dim == 0) throw Error(ErrorCode::DimMismatch, "bank dim must be positive");
    std::sort(prototypes.begin(), prototypes.end(),
              [](const Prototype& a, const Prototype& b) { return a.class_id < b.class_id; });
    PrototypeBank bank(kind, dim);
    for (std::size_t k = 0; k < prototypes.size(); ++k) {
        const auto& p = prototypes[k];
        if (k > 0 && prototypes[k - 1].class_id == p.class_id) {
            throw Error(ErrorCode::DuplicateClass, "class " + std::to_string(p.class_id) + " twice in one bank");
        }
        if (p.vector.size() != dim) {
            throw Error(ErrorCode::DimMismatch, "prototype for class " + std::to_string(p.class_id) + " has dim " +
                                                    std::to_string(p.vector.size()));
        }
        if (p.support_count == 0) throw Error(ErrorCode::EmptyClass, "class " + std::to_string(p.class_id));
        for (float v : p.vector) {
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteFeature, "prototype " + std::to_string(p.class_id));
        }
        bank.class_ids_.push_back(p.class_id);
        bank.matrix_.insert(bank.matrix_.end(), p.vector.begin(), p.vector.end());
        bank.support_counts_.push_back(p.support_count);
        bank.squared_norms_.push_back(simd::dot(p.vector, p.vector));
    }
    return bank;
}

std::optional<std::size_t> PrototypeBank::find(ClassId id) const noexcept {
    const auto it = std::lower_bound(class_ids_.begin(), class_ids_.end(), id);
    if (it == class_ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - class_ids_.begin());
}

Prototype PrototypeBank::prototype(std::size_t k) const {
    const auto v = vector(k);
    return Prototype{class_ids_[k], {v.begin(), v.end()}, support_counts_[k]};
}

PrototypeBank compute_prototypes(const EmbeddingSet& set, std::span<const std::size_t> rows, BankKind kind) {
    std::map<ClassId, std::vector<std::size_t>> by_class;
    for (std::size_t r : rows) by_class[set.record(r).class_id].push_back(r);

    const std::uint32_t dim = set.dim();
    std::vector<Prototype> prototypes;
    prototypes.reserve(by_class.size());
    std::vector<double> sum(dim);
    for (auto& [id, members] : by_class) {
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            const auto fa = set.feature(a);
            const auto fb = set.feature(b);
            return std::lexicographical_compare(fa.begin(), fa.end(), fb.begin(), fb.end());
        });
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t r : members) simd::accumulate(sum, set.feature(r));
        Prototype p{id, std::vector<float>(dim), members.size()};
        const double n = static_cast<double>(members.size());
        for (std::uint32_t k = 0; k < dim; ++k) p.vector[k] = static_cast<float>(sum[k] / n);
        prototypes.push_back(std::move(p));
    }
    return PrototypeBank::from_prototypes(kind, dim, std::move(prototypes));
}

PrototypeBank compute_prototypes(const EmbeddingSet& set, Split split, BankKind kind) {
    const auto rows = set.rows(split);
    return compute_prototypes(set, rows, kind);
}

double cosine_from_parts(double dot, double squared_norm_a, double squared_norm_b) noexcept {
    const double d = 1.0 - dot / (std::sqrt(squared_norm_a) * std::sqrt(squared_norm_b));
    return std::clamp(d, 0.0, 2.0);
}

double distance(std::span<const float> a, std::span<const float> b, Metric metric) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    if (metric == Metric::Euclidean) return std::sqrt(simd::squared_l2(a, b));
    const double na = simd::dot(a, a);
    const double nb = simd::dot(b, b);
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine distance of a zero vector");
    return cosine_from_parts(simd::dot(a, b), na, nb);
}

Query::Query(std::span<const float> feature, Metric metric) : feature_(feature), metric_(metric) {
    squared_norm_ = simd::dot(feature, feature);
    if (metric == Metric::Cosine && squared_norm_ == 0.0) {
        throw Error(ErrorCode::ZeroVector, "cosine query is the zero vector");
    }
}

double Query::distance_to(const PrototypeBank& bank, std::size_t k) const {
    const auto p = bank.vector(k);
    if (metric_ == Metric::Euclidean) return std::sqrt(simd::squared_l2(feature_, p));
    const double np = bank.squared_norm(k);
    if (np == 0.0) {
        throw Error(ErrorCode::ZeroVector, "prototype for class " + std::to_string(bank.class_id(k)) + " is zero");
    }
    return cosine_from_parts(simd::dot(feature_, p), squared_norm_, np);
}

Nearest Query::nearest(const PrototypeBank& bank) const {
    Nearest best{0, bank.class_id(0), distance_to(bank, 0)};
    for (std::size_t k = 1; k < bank.size(); ++k) {
        const double d = distance_to(bank, k);
        if (d < best.distance) best = {k, bank.class_id(k), d};
    }
    return best;
}

void validate(const DecisionConfig& cfg) {
    if (std::isnan(cfg.alpha) || cfg.alpha < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "alpha must be non-negative, got " + std::to_string(cfg.alpha));
    }
}

namespace {

void check_dim(std::span<const float> f, const PrototypeBank& bank) {
    if (f.size() != bank.dim()) {
        throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(f.size()) + ", bank dim " +
                                                std::to_string(bank.dim()));
    }
}

}  // namespace

Classification classify_vanilla(std::span<const float> f, const PrototypeBank& base, const PrototypeBank& novel,
                                const DecisionConfig& cfg) {
    if (base.empty() && novel.empty()) throw Error(ErrorCode::EmptyBanks, "both banks are empty");
    if (!base.empty()) check_dim(f, base);
    if (!novel.empty()) check_dim(f, novel);
    const Query q(f, cfg.metric);

    Classification out;
    std::optional<Nearest> nb;
    std::optional<Nearest> nn;
    if (!base.empty()) {
        nb = q.nearest(base);
        out.min_base_dist = nb->distance;
    } else {
        out.min_base_dist = std::numeric_limits<double>::infinity();
    }
    if (!novel.empty()) {
        nn = q.nearest(novel);
        out.min_novel_dist = nn->distance;
    }
    if (!nn || (nb && (nb->distance < nn->distance ||
                       (nb->distance == nn->distance && nb->class_id < nn->class_id)))) {
        out.predicted_class = nb->class_id;
        out.routed_novel = false;
    } else {
        out.predicted_class = nn->class_id;
        out.routed_novel = true;
    }
    return out;
}

NcdDecision ncd_rule(std::span<const float> f, const PrototypeBank& base, const DecisionConfig& cfg) {
    validate(cfg);
    if (base.empty()) throw Error(ErrorCode::EmptyBanks, "base bank is empty");
    check_dim(f, base);
    const Query q(f, cfg.metric);
    const double d = q.nearest(base).distance;
    return {d > cfg.alpha, d};
}

Classification classify_ncd(std::span<const float> f, const PrototypeBank& base, const PrototypeBank& novel,
                            const DecisionConfig& cfg) {
    validate(cfg);
    if (base.empty()) throw Error(ErrorCode::EmptyBanks, "base bank is empty");
    check_dim(f, base);
    if (!novel.empty()) check_dim(f, novel);
    const Query q(f, cfg.metric);
    const Nearest nb = q.nearest(base);

    Classification out;
    out.min_base_dist = nb.distance;
    out.routed_novel = nb.distance > cfg.alpha;
    if (!novel.empty()) {
        const Nearest nn = q.nearest(novel);
        out.min_novel_dist = nn.distance;
        if (out.routed_novel) out.predicted_class = nn.class_id;
    } else if (out.routed_novel) {
        throw Error(ErrorCode::NovelBankEmpty, "query routed to the novel branch but no novel prototypes exist");
    }
    if (!out.routed_novel) out.predicted_class = nb.class_id;
    return out;
}

}  // namespace ncd
