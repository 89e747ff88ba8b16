#pragma once

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>

#include "lqe/harness/evaluate.hpp"
#include "lqe/ingest/ingest.hpp"
#include "temp_dir.hpp"

namespace lqe::testing {

inline std::filesystem::path data_dir() { return LQE_DATA_DIR; }
inline std::filesystem::path test_data_dir() { return LQE_TEST_DATA_DIR; }
inline std::filesystem::path golden_dir() { return LQE_GOLDEN_DIR; }

/// The shipped corpora, ingested once per process.
inline const std::map<std::string, std::unique_ptr<ingest::LogStore>>& fixture_stores()
{
    static const auto stores = [] {
        std::map<std::string, std::unique_ptr<ingest::LogStore>> out;
        for (const char* app : {"openssh", "openstack", "hdfs"}) {
            const auto manifest = ingest::CorpusManifest::load(data_dir() / app / "manifest.json");
            out[app] = std::make_unique<ingest::LogStore>(ingest::ingest(manifest).store);
        }
        return out;
    }();
    return stores;
}

inline harness::StoreMap fixture_store_map()
{
    harness::StoreMap m;
    for (const auto& [name, store] : fixture_stores()) {
        m[name] = store.get();
    }
    return m;
}

/// Compares against tests/golden/<name>. With LQE_UPDATE_GOLDEN=1 in the
/// environment the file is rewritten instead.
inline void expect_golden(const std::string& name, const std::string& actual)
{
    const auto path = golden_dir() / name;
    if (const char* update = std::getenv("LQE_UPDATE_GOLDEN"); update != nullptr && std::string(update) == "1") {
        std::ofstream(path, std::ios::binary | std::ios::trunc) << actual;
        return;
    }
    ASSERT_TRUE(std::filesystem::exists(path)) << "missing golden file " << path;
    EXPECT_EQ(read_file(path), actual) << "golden mismatch: " << path;
}

}  // namespace lqe::testing
