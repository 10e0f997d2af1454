#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

namespace test_util {

// Unique scratch directory, removed on destruction.
struct temp_dir {
    std::filesystem::path path;

    temp_dir() {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        path = base / ("newsagent_test_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~temp_dir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    temp_dir(const temp_dir&) = delete;
    temp_dir& operator=(const temp_dir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::filesystem::path repo_root() {
    if (const char* env = std::getenv("NEWSAGENT_REPO")) return env;
    return std::filesystem::current_path();
}

}  // namespace test_util
