#include "ncd/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ncd/error.hpp"

namespace ncd {

std::string_view to_string(Split split) noexcept {
    switch (split) {
        case Split::BaseTrain: return "base_train";
        case Split::BaseTest: return "base_test";
        case Split::NovelPool: return "novel_pool";
    }
    return "unknown";
}

std::optional<Split> parse_split(std::string_view text) noexcept {
    if (text == "base_train") return Split::BaseTrain;
    if (text == "base_test") return Split::BaseTest;
    if (text == "novel_pool") return Split::NovelPool;
    return std::nullopt;
}

EmbeddingSet::EmbeddingSet(std::uint32_t dim, std::vector<RecordTag> records, std::vector<float> features,
                           std::map<ClassId, std::string> class_names)
    : dim_(dim), records_(std::move(records)), features_(std::move(features)),
      class_names_(std::move(class_names)) {
    if (dim_ == 0) throw Error(ErrorCode::DimMismatch, "dim must be positive");
    if (features_.size() != records_.size() * dim_) {
        throw Error(ErrorCode::DimMismatch, "feature storage holds " + std::to_string(features_.size()) +
                                                " floats, expected " + std::to_string(records_.size() * dim_));
    }
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (!std::isfinite(features_[i])) {
            throw Error(ErrorCode::NonFiniteFeature, "record " + std::to_string(i / dim_) + ", component " +
                                                         std::to_string(i % dim_));
        }
    }
    std::set<ClassId> base;
    std::set<ClassId> novel;
    for (const auto& r : records_) {
        if (static_cast<std::uint8_t>(r.split) > 2) {
            throw Error(ErrorCode::BadSplitTag, "split tag " + std::to_string(static_cast<int>(r.split)));
        }
        (is_base(r.split) ? base : novel).insert(r.class_id);
    }
    for (ClassId id : novel) {
        if (base.count(id) != 0) {
            throw Error(ErrorCode::SplitOverlap, "class " + std::to_string(id) + " is both base and novel");
        }
    }
}

std::vector<std::size_t> EmbeddingSet::rows(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].split == split) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> EmbeddingSet::rows(Split split, ClassId class_id) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].split == split && records_[i].class_id == class_id) out.push_back(i);
    }
    return out;
}

std::vector<ClassId> EmbeddingSet::classes(Split split) const {
    std::set<ClassId> ids;
    for (const auto& r : records_) {
        if (r.split == split) ids.insert(r.class_id);
    }
    return {ids.begin(), ids.end()};
}

bool EmbeddingSet::operator==(const EmbeddingSet& other) const noexcept {
    if (dim_ != other.dim_ || records_ != other.records_ || class_names_ != other.class_names_) return false;
    return std::equal(features_.begin(), features_.end(), other.features_.begin(), other.features_.end(),
                      [](float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); });
}

RowView select(const EmbeddingSet& set, Split split) { return RowView{&set, set.rows(split)}; }

SplitSummary summarize(const EmbeddingSet& set) {
    SplitSummary s;
    std::set<ClassId> base;
    std::set<ClassId> novel;
    for (const auto& r : set.records()) {
        auto& c = s.per_class_counts[r.class_id];
        switch (r.split) {
            case Split::BaseTrain:
                ++c.train;
                base.insert(r.class_id);
                break;
            case Split::BaseTest: ++c.test; break;
            case Split::NovelPool:
                ++c.pool;
                novel.insert(r.class_id);
                break;
        }
    }
    s.n_base_classes = base.size();
    s.n_novel_classes = novel.size();
    return s;
}

std::string format_summary(const SplitSummary& summary, std::uint32_t dim) {
    std::ostringstream os;
    os << "dim " << dim << "\n";
    os << "base classes (N0) " << summary.n_base_classes << "\n";
    os << "novel classes " << summary.n_novel_classes << "\n";
    os << "class_id train test pool\n";
    for (const auto& [id, c] : summary.per_class_counts) {
        os << id << ' ' << c.train << ' ' << c.test << ' ' << c.pool << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// EMB1

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw Error(ErrorCode::TruncatedFile, std::string("while reading ") + what + " at byte " +
                                                      std::to_string(pos_));
        }
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::string encode_names(const std::map<ClassId, std::string>& names) {
    if (names.empty()) return {};
    nlohmann::ordered_json table = nlohmann::ordered_json::object();
    for (const auto& [id, name] : names) table[std::to_string(id)] = name;
    nlohmann::ordered_json doc;
    doc["class_names"] = std::move(table);
    return doc.dump();
}

std::map<ClassId, std::string> decode_names(std::span<const std::uint8_t> bytes) {
    std::map<ClassId, std::string> names;
    if (bytes.empty()) return names;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("class-name table: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("class_names") || !doc["class_names"].is_object()) {
        throw Error(ErrorCode::ParseError, "class-name table lacks a \"class_names\" object");
    }
    for (const auto& [key, value] : doc["class_names"].items()) {
        ClassId id = 0;
        const auto* end = key.data() + key.size();
        const auto [ptr, ec] = std::from_chars(key.data(), end, id);
        if (ec != std::errc{} || ptr != end || !value.is_string()) {
            throw Error(ErrorCode::ParseError, "bad class-name entry \"" + key + "\"");
        }
        names[id] = value.get<std::string>();
    }
    return names;
}

}  // namespace

std::vector<std::uint8_t> serialize_emb1(const EmbeddingSet& set) {
    const std::string names = encode_names(set.class_names());
    std::vector<std::uint8_t> out;
    out.reserve(kEmb1HeaderSize + names.size() + set.size() * (8 + 4 * std::size_t{set.dim()}));
    out.insert(out.end(), {'E', 'M', 'B', '1'});
    put_u32(out, kEmb1Version);
    put_u32(out, set.dim());
    put_u64(out, set.size());
    put_u32(out, static_cast<std::uint32_t>(names.size()));
    out.insert(out.end(), names.begin(), names.end());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& r = set.record(i);
        put_u32(out, r.class_id);
        out.push_back(static_cast<std::uint8_t>(r.split));
        out.insert(out.end(), {0, 0, 0});
        for (float f : set.feature(i)) put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

EmbeddingSet parse_emb1(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    const auto magic = in.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), "EMB1")) throw Error(ErrorCode::BadMagic, "expected \"EMB1\"");
    const std::uint32_t version = in.u32("version");
    if (version != kEmb1Version) {
        throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
    }
    const std::uint32_t dim = in.u32("dim");
    if (dim == 0) throw Error(ErrorCode::DimMismatch, "dim is 0");
    const std::uint64_t count = in.u64("record_count");
    const std::uint32_t name_len = in.u32("name_table_len");
    auto names = decode_names(in.take(name_len, "class-name table"));

    const std::uint64_t record_size = 8 + 4 * std::uint64_t{dim};
    if (count > in.remaining() / record_size) {
        throw Error(ErrorCode::TruncatedFile, std::to_string(count) + " records of " + std::to_string(record_size) +
                                                  " bytes declared, " + std::to_string(in.remaining()) +
                                                  " bytes remain");
    }
    std::vector<RecordTag> records;
    std::vector<float> features;
    records.reserve(count);
    features.reserve(count * dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        RecordTag tag;
        tag.class_id = in.u32("class_id");
        const std::uint8_t split = in.u8("split");
        if (split > 2) {
            throw Error(ErrorCode::BadSplitTag, "record " + std::to_string(i) + " has split " + std::to_string(split));
        }
        tag.split = static_cast<Split>(split);
        for (std::uint8_t b : in.take(3, "padding")) {
            if (b != 0) throw Error(ErrorCode::ParseError, "record " + std::to_string(i) + " has nonzero padding");
        }
        records.push_back(tag);
        for (std::uint32_t k = 0; k < dim; ++k) features.push_back(std::bit_cast<float>(in.u32("feature")));
    }
    if (in.remaining() != 0) {
        throw Error(ErrorCode::TrailingData, std::to_string(in.remaining()) + " bytes after last record");
    }
    return EmbeddingSet(dim, std::move(records), std::move(features), std::move(names));
}

EmbeddingSet load_emb1(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_emb1(bytes);
}

void save_emb1(const EmbeddingSet& set, const std::filesystem::path& path) {
    const auto bytes = serialize_emb1(set);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool looks_numeric(std::string_view token) {
    return !token.empty() && (std::isdigit(static_cast<unsigned char>(token.front())) || token.front() == '-' ||
                              token.front() == '+' || token.front() == '.');
}

}  // namespace

EmbeddingSet parse_csv(std::string_view text, std::uint32_t dim) {
    if (dim == 0) throw Error(ErrorCode::DimMismatch, "dim must be positive");
    std::vector<RecordTag> records;
    std::vector<float> features;
    std::size_t row = 0;
    bool first_content_row = true;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        const std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++row;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (first_content_row) {
            first_content_row = false;
            if (!looks_numeric(fields.front())) continue;
        }
        const auto where = [&] { return "row " + std::to_string(row); };
        if (fields.size() != std::size_t{dim} + 2) {
            throw Error(ErrorCode::DimMismatch,
                        where() + ": " + std::to_string(fields.size() - 2) + " features, expected " + std::to_string(dim));
        }
        RecordTag tag;
        {
            const auto f = fields[0];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), tag.class_id);
            if (ec != std::errc{} || ptr != f.data() + f.size()) {
                throw Error(ErrorCode::ParseError, where() + ": bad class_id \"" + std::string(f) + "\"");
            }
        }
        const auto split = parse_split(fields[1]);
        if (!split) throw Error(ErrorCode::ParseError, where() + ": bad split \"" + std::string(fields[1]) + "\"");
        tag.split = *split;
        for (std::size_t k = 2; k < fields.size(); ++k) {
            const auto f = fields[k];
            float value = 0.0f;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
            if (ec != std::errc{} || ptr != f.data() + f.size()) {
                throw Error(ErrorCode::ParseError, where() + ": bad feature \"" + std::string(f) + "\"");
            }
            if (!std::isfinite(value)) throw Error(ErrorCode::NonFiniteFeature, where());
            features.push_back(value);
        }
        records.push_back(tag);
    }
    return EmbeddingSet(dim, std::move(records), std::move(features));
}

EmbeddingSet load_csv(const std::filesystem::path& path, std::uint32_t dim) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), dim);
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, std::optional<std::uint32_t> csv_dim) {
    if (path.extension() == ".csv") {
        if (!csv_dim) throw Error(ErrorCode::InvalidArgument, "CSV input needs an explicit dim");
        return load_csv(path, *csv_dim);
    }
    return load_emb1(path);
}

std::uint64_t fingerprint(const EmbeddingSet& set) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : serialize_emb1(set)) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ncd
