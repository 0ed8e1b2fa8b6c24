#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace plgate::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// An output directory that is either completed with a manifest or rolled
/// back. Every file goes through path() or write(), so a failed run can
/// remove exactly what it produced (and the directory itself if it created it).
class RunDir {
public:
    explicit RunDir(std::filesystem::path root);
    ~RunDir();
    RunDir(const RunDir&) = delete;
    RunDir& operator=(const RunDir&) = delete;

    const std::filesystem::path& root() const noexcept { return root_; }

    /// Registers `rel` as an output and creates its parent directories.
    std::filesystem::path path(const std::string& rel);
    void write(const std::string& rel, std::string_view bytes);
    void write_json(const std::string& rel, const nlohmann::json& j);

    /// Records an input file and its hash for the manifest.
    void add_input(const std::filesystem::path& p);

    /// Writes manifest.json and keeps everything.
    void commit(const std::string& command, const nlohmann::json& config, std::uint64_t seed,
                const std::vector<std::string>& argv);

    const std::vector<std::string>& outputs() const noexcept { return outputs_; }

private:
    void rollback() noexcept;

    std::filesystem::path root_;
    bool committed_ = false;
    std::vector<std::string> outputs_;
    std::vector<std::filesystem::path> created_dirs_;
    nlohmann::json inputs_ = nlohmann::json::array();
    std::chrono::system_clock::time_point started_;
};

} // namespace plgate::cli
