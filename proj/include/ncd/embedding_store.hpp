#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ncd {

using ClassId = std::uint32_t;

enum class Split : std::uint8_t { BaseTrain = 0, BaseTest = 1, NovelPool = 2 };

std::string_view to_string(Split split) noexcept;
std::optional<Split> parse_split(std::string_view text) noexcept;

inline bool is_base(Split split) noexcept { return split != Split::NovelPool; }

struct RecordTag {
    ClassId class_id = 0;
    Split split = Split::BaseTrain;

    bool operator==(const RecordTag&) const = default;
};

/// Labeled feature matrix. Immutable once built; features are stored
/// row-major as float32 so rows can be handed to the SIMD kernels directly.
///
/// Invariants checked at construction:
///   - dim > 0 and features.size() == records.size() * dim
///   - all features finite
///   - no class id appears in both a base split and the novel pool
class EmbeddingSet {
public:
    EmbeddingSet(std::uint32_t dim, std::vector<RecordTag> records, std::vector<float> features,
                 std::map<ClassId, std::string> class_names = {});

    std::uint32_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    const RecordTag& record(std::size_t i) const { return records_[i]; }
    std::span<const RecordTag> records() const noexcept { return records_; }
    std::span<const float> feature(std::size_t i) const {
        return {features_.data() + i * dim_, dim_};
    }
    std::span<const float> features() const noexcept { return features_; }
    const std::map<ClassId, std::string>& class_names() const noexcept { return class_names_; }

    /// Row indices with the given split, ascending.
    std::vector<std::size_t> rows(Split split) const;
    /// Row indices of one class within one split, ascending.
    std::vector<std::size_t> rows(Split split, ClassId class_id) const;
    /// Distinct class ids having at least one record in `split`, ascending.
    std::vector<ClassId> classes(Split split) const;

    /// Field-by-field equality; features compared bit-exactly.
    bool operator==(const EmbeddingSet& other) const noexcept;

private:
    std::uint32_t dim_;
    std::vector<RecordTag> records_;
    std::vector<float> features_;
    std::map<ClassId, std::string> class_names_;
};

/// Rows of an EmbeddingSet selected for one role (calibration split,
/// episode queries, ...). Does not own the set.
struct RowView {
    const EmbeddingSet* set = nullptr;
    std::vector<std::size_t> rows;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }
    std::span<const float> feature(std::size_t k) const { return set->feature(rows[k]); }
    ClassId label(std::size_t k) const { return set->record(rows[k]).class_id; }
    Split split(std::size_t k) const { return set->record(rows[k]).split; }
};

RowView select(const EmbeddingSet& set, Split split);

struct ClassCounts {
    std::size_t train = 0;
    std::size_t test = 0;
    std::size_t pool = 0;

    bool operator==(const ClassCounts&) const = default;
};

struct SplitSummary {
    std::size_t n_base_classes = 0;   // distinct ids with a BaseTrain record
    std::size_t n_novel_classes = 0;  // distinct ids in the novel pool
    std::map<ClassId, ClassCounts> per_class_counts;
};

SplitSummary summarize(const EmbeddingSet& set);
std::string format_summary(const SplitSummary& summary, std::uint32_t dim);

// EMB1 binary format, little-endian:
//   0  char[4]  "EMB1"
//   4  u32      version (1)
//   8  u32      dim
//   12 u64      record_count
//   20 u32      name_table_len
//   24 bytes    UTF-8 JSON {"class_names": {"<id>": "<name>"}}, absent if len is 0
//   then record_count x { u32 class_id, u8 split, u8[3] zero, f32[dim] }
inline constexpr std::size_t kEmb1HeaderSize = 24;
inline constexpr std::uint32_t kEmb1Version = 1;

std::vector<std::uint8_t> serialize_emb1(const EmbeddingSet& set);
EmbeddingSet parse_emb1(std::span<const std::uint8_t> bytes);

EmbeddingSet load_emb1(const std::filesystem::path& path);
void save_emb1(const EmbeddingSet& set, const std::filesystem::path& path);

/// Rows `class_id,split,f_1,...,f_dim`; a first row whose first token is
/// not numeric is treated as a header.
EmbeddingSet load_csv(const std::filesystem::path& path, std::uint32_t dim);
EmbeddingSet parse_csv(std::string_view text, std::uint32_t dim);

/// Loads by extension: .csv needs `csv_dim`, anything else is EMB1.
EmbeddingSet load_embeddings(const std::filesystem::path& path, std::optional<std::uint32_t> csv_dim);

/// FNV-1a 64 over the EMB1 serialization.
std::uint64_t fingerprint(const EmbeddingSet& set);

}  // namespace ncd
