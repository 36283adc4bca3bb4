#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ncd/embedding_store.hpp"
#include "ncd/error.hpp"
#include "ncd/rng.hpp"
#include "ncd/synthetic_generator.hpp"

using namespace ncd;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected ncd::Error");
    return ErrorCode::InvalidArgument;
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("ncd_store_" + name); }

EmbeddingSet random_set(SplitMix64& rng) {
    const auto dim = static_cast<std::uint32_t>(1 + rng.uniform_below(12));
    const auto n = static_cast<std::size_t>(rng.uniform_below(30));
    std::vector<RecordTag> tags;
    std::vector<float> feats;
    for (std::size_t i = 0; i < n; ++i) {
        const auto split = static_cast<Split>(rng.uniform_below(3));
        // Base ids 0..4, novel ids 10..14 keep the splits disjoint.
        const auto id = static_cast<ClassId>(rng.uniform_below(5) + (split == Split::NovelPool ? 10 : 0));
        tags.push_back({id, split});
        for (std::uint32_t k = 0; k < dim; ++k) feats.push_back(static_cast<float>(rng.gaussian() * 1e3));
    }
    std::map<ClassId, std::string> names;
    if (rng.uniform_below(2) == 0) names = {{0, "apple"}, {10, "naïve café"}, {3, "q\"uote"}};
    return EmbeddingSet(dim, tags, feats, names);
}

}  // namespace

TEST_CASE("two-record set round-trips field by field") {
    const EmbeddingSet s(2, {{0, Split::BaseTrain}, {7, Split::NovelPool}}, {1.0f, 0.0f, -0.5f, 0.25f}, {{7, "seven"}});
    const auto path = temp_path("two.emb1");
    save_emb1(s, path);
    const EmbeddingSet back = load_emb1(path);
    CHECK(back.dim() == 2);
    REQUIRE(back.size() == 2);
    CHECK(back.record(0) == RecordTag{0, Split::BaseTrain});
    CHECK(back.record(1) == RecordTag{7, Split::NovelPool});
    CHECK(back.feature(1)[0] == -0.5f);
    CHECK(back.class_names().at(7) == "seven");
    CHECK(back == s);
    fs::remove(path);
}

TEST_CASE("empty set is a 24-byte header-only file") {
    const EmbeddingSet s(4, {}, {});
    const auto bytes = serialize_emb1(s);
    CHECK(bytes.size() == kEmb1HeaderSize);
    CHECK(bytes.size() == 4 + 4 + 4 + 8 + 4);
    CHECK(parse_emb1(bytes) == s);
}

TEST_CASE("record layout matches the documented byte offsets") {
    const EmbeddingSet s(1, {{0x01020304, Split::BaseTest}}, {1.0f});
    const auto b = serialize_emb1(s);
    REQUIRE(b.size() == 24 + 4 + 1 + 3 + 4);
    CHECK(b[8] == 1);                                    // dim
    CHECK(b[12] == 1);                                   // record_count (u64)
    CHECK(b[24] == 0x04);                                // class id, little-endian
    CHECK(b[27] == 0x01);
    CHECK(b[28] == 1);                                   // split = BaseTest
    CHECK((b[29] == 0 && b[30] == 0 && b[31] == 0));     // padding
    CHECK(b[35] == 0x3f);                                // 1.0f = 0x3f800000
}

TEST_CASE("format errors") {
    const EmbeddingSet s(3, {{1, Split::BaseTrain}}, {1, 2, 3});
    auto bytes = serialize_emb1(s);

    SUBCASE("bad magic") {
        auto b = bytes;
        b[0] = b[1] = b[2] = b[3] = 'X';
        CHECK(code_of([&] { parse_emb1(b); }) == ErrorCode::BadMagic);
    }
    SUBCASE("dim 3 with only two floats left") {
        auto b = bytes;
        b.resize(b.size() - 4);
        CHECK(code_of([&] { parse_emb1(b); }) == ErrorCode::TruncatedFile);
    }
    SUBCASE("short header") {
        std::vector<std::uint8_t> b(bytes.begin(), bytes.begin() + 10);
        CHECK(code_of([&] { parse_emb1(b); }) == ErrorCode::TruncatedFile);
    }
    SUBCASE("trailing bytes") {
        auto b = bytes;
        b.push_back(0);
        CHECK(code_of([&] { parse_emb1(b); }) == ErrorCode::TrailingData);
    }
    SUBCASE("unknown version") {
        auto b = bytes;
        b[4] = 2;
        CHECK(code_of([&] { parse_emb1(b); }) == ErrorCode::UnsupportedVersion);
    }
    SUBCASE("NaN feature") {
        auto b = bytes;
        const auto nan = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
        for (int i = 0; i < 4; ++i) b[32 + i] = static_cast<std::uint8_t>(nan >> (8 * i));
        CHECK(code_of([&] { parse_emb1(b); }) == ErrorCode::NonFiniteFeature);
    }
    SUBCASE("bad split tag") {
        auto b = bytes;
        b[28] = 9;
        CHECK(code_of([&] { parse_emb1(b); }) == ErrorCode::BadSplitTag);
    }
    SUBCASE("nonzero padding") {
        auto b = bytes;
        b[30] = 1;
        CHECK(code_of([&] { parse_emb1(b); }) == ErrorCode::ParseError);
    }
    SUBCASE("split overlap in file") {
        const EmbeddingSet a(1, {{1, Split::BaseTrain}, {2, Split::NovelPool}}, {1, 2});
        auto b = serialize_emb1(a);
        b[24 + 8 + 4] = 1;  // second record's class id becomes 1
        CHECK(code_of([&] { parse_emb1(b); }) == ErrorCode::SplitOverlap);
    }
    SUBCASE("missing file") {
        CHECK(code_of([&] { load_emb1(temp_path("does_not_exist.emb1")); }) == ErrorCode::IoError);
    }
}

TEST_CASE("invariant violations are refused before anything is written") {
    CHECK(code_of([] { EmbeddingSet(2, {{0, Split::BaseTrain}, {0, Split::NovelPool}}, {1, 0, 0, 1}); }) ==
          ErrorCode::SplitOverlap);
    CHECK(code_of([] { EmbeddingSet(2, {{0, Split::BaseTrain}}, {1}); }) == ErrorCode::DimMismatch);
    CHECK(code_of([] { EmbeddingSet(0, {}, {}); }) == ErrorCode::DimMismatch);
    CHECK(code_of([] { EmbeddingSet(1, {{0, Split::BaseTrain}}, {std::numeric_limits<float>::infinity()}); }) ==
          ErrorCode::NonFiniteFeature);
}

TEST_CASE("property: EMB1 round trip is bit-exact") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const EmbeddingSet s = random_set(rng);
        const auto bytes = serialize_emb1(s);
        const EmbeddingSet back = parse_emb1(bytes);
        REQUIRE(back == s);
        REQUIRE(serialize_emb1(back) == bytes);
    }
}

TEST_CASE("CSV parsing") {
    SUBCASE("single row") {
        const auto s = parse_csv("0,base_train,1.0,0.0\n", 2);
        REQUIRE(s.size() == 1);
        CHECK(s.record(0) == RecordTag{0, Split::BaseTrain});
        CHECK(s.feature(0)[0] == 1.0f);
        CHECK(s.feature(0)[1] == 0.0f);
    }
    SUBCASE("header row is skipped") {
        const auto s = parse_csv("class_id,split,f_1,f_2\r\n3,base_test,0.5,2\r\n", 2);
        REQUIRE(s.size() == 1);
        CHECK(s.record(0) == RecordTag{3, Split::BaseTest});
    }
    SUBCASE("overlap") {
        CHECK(code_of([] { parse_csv("0,novel_pool,1.0,0.0\n0,base_test,0.0,1.0\n", 2); }) == ErrorCode::SplitOverlap);
    }
    SUBCASE("parse error names the row") {
        try {
            parse_csv("0,base_train,1,2\n1,base_train,1,abc\n", 2);
            FAIL("expected ParseError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ParseError);
            CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        }
    }
    SUBCASE("unknown split") {
        CHECK(code_of([] { parse_csv("0,train,1,2\n", 2); }) == ErrorCode::ParseError);
    }
    SUBCASE("wrong feature count") {
        CHECK(code_of([] { parse_csv("0,base_train,1,2,3\n", 2); }) == ErrorCode::DimMismatch);
    }
    SUBCASE("non-finite") {
        CHECK(code_of([] { parse_csv("0,base_train,nan,2\n", 2); }) == ErrorCode::NonFiniteFeature);
    }
}

TEST_CASE("property: CSV and EMB1 load the same data") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const EmbeddingSet s = random_set(rng);
        std::ostringstream csv;
        csv << "class_id,split";
        for (std::uint32_t k = 0; k < s.dim(); ++k) csv << ",f_" << k + 1;
        csv << "\n";
        char buf[32];
        for (std::size_t i = 0; i < s.size(); ++i) {
            csv << s.record(i).class_id << ',' << to_string(s.record(i).split);
            for (float f : s.feature(i)) {
                std::snprintf(buf, sizeof buf, "%.9g", f);
                csv << ',' << buf;
            }
            csv << "\n";
        }
        const auto from_csv = parse_csv(csv.str(), s.dim());
        const EmbeddingSet without_names(s.dim(), {s.records().begin(), s.records().end()},
                                         {s.features().begin(), s.features().end()});
        REQUIRE(from_csv == without_names);
    }
}

TEST_CASE("load_embeddings dispatches on extension") {
    const auto path = temp_path("x.csv");
    {
        std::ofstream out(path);
        out << "0,base_train,1,2\n";
    }
    CHECK(load_embeddings(path, 2).size() == 1);
    CHECK(code_of([&] { load_embeddings(path, std::nullopt); }) == ErrorCode::InvalidArgument);
    fs::remove(path);
}

TEST_CASE("summarize") {
    SUBCASE("two base, three novel") {
        std::vector<RecordTag> tags{{0, Split::BaseTrain}, {0, Split::BaseTest}, {1, Split::BaseTrain},
                                    {1, Split::BaseTest},  {5, Split::NovelPool}, {6, Split::NovelPool},
                                    {7, Split::NovelPool}, {7, Split::NovelPool}};
        const EmbeddingSet s(1, tags, std::vector<float>(tags.size(), 1.0f));
        const auto sum = summarize(s);
        CHECK(sum.n_base_classes == 2);
        CHECK(sum.n_novel_classes == 3);
        CHECK(sum.per_class_counts.at(7) == ClassCounts{0, 0, 2});
        CHECK(sum.per_class_counts.at(0) == ClassCounts{1, 1, 0});
    }
    SUBCASE("empty") {
        const auto sum = summarize(EmbeddingSet(3, {}, {}));
        CHECK(sum.n_base_classes == 0);
        CHECK(sum.n_novel_classes == 0);
        CHECK(sum.per_class_counts.empty());
    }
    SUBCASE("CIFAR-like layout") {
        SynthConfig c;
        c.dim = 4;
        c.n_base = 50;
        c.n_novel_pool = 2;
        c.train_per_class = 500;
        c.test_per_class = 100;
        c.pool_per_class = 3;
        const auto sum = summarize(generate(c));
        CHECK(sum.n_base_classes == 50);
        for (ClassId id = 0; id < 50; ++id) CHECK(sum.per_class_counts.at(id) == ClassCounts{500, 100, 0});
    }
}

TEST_CASE("fingerprint tracks content") {
    const EmbeddingSet a(1, {{0, Split::BaseTrain}}, {1.0f});
    const EmbeddingSet b(1, {{0, Split::BaseTrain}}, {2.0f});
    CHECK(fingerprint(a) == fingerprint(EmbeddingSet(1, {{0, Split::BaseTrain}}, {1.0f})));
    CHECK(fingerprint(a) != fingerprint(b));
}
