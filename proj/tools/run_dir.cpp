#include "run_dir.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "plgate/error.hpp"
#include "plgate/io.hpp"

namespace fs = std::filesystem;

namespace plgate::cli {

namespace {

std::string utc_stamp(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Directories from `dir` up to (excluding) the first existing ancestor.
std::vector<fs::path> missing_dirs(const fs::path& dir) {
    std::vector<fs::path> out;
    for (fs::path p = dir; !p.empty() && !fs::exists(p); p = p.parent_path()) {
        out.push_back(p);
        if (p == p.parent_path()) {
            break;
        }
    }
    return out;
}

} // namespace

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 unavailable");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof b, "%02x", md[i]);
        hex += b;
    }
    return hex;
}

RunDir::RunDir(fs::path root) : root_(std::move(root)), started_(std::chrono::system_clock::now()) {
    if (fs::exists(root_) && !fs::is_directory(root_)) {
        throw Error(root_.string() + " exists and is not a directory");
    }
    auto missing = missing_dirs(root_);
    fs::create_directories(root_);
    created_dirs_.insert(created_dirs_.end(), missing.begin(), missing.end());
}

RunDir::~RunDir() {
    if (!committed_) {
        rollback();
    }
}

fs::path RunDir::path(const std::string& rel) {
    const fs::path p = root_ / rel;
    auto missing = missing_dirs(p.parent_path());
    fs::create_directories(p.parent_path());
    created_dirs_.insert(created_dirs_.end(), missing.begin(), missing.end());
    if (std::find(outputs_.begin(), outputs_.end(), rel) == outputs_.end()) {
        outputs_.push_back(rel);
    }
    return p;
}

void RunDir::write(const std::string& rel, std::string_view bytes) {
    write_file_atomic(path(rel), bytes);
}

void RunDir::write_json(const std::string& rel, const nlohmann::json& j) {
    plgate::write_json(path(rel), j);
}

void RunDir::add_input(const fs::path& p) {
    inputs_.push_back({{"path", fs::absolute(p).lexically_normal().string()},
                       {"bytes", fs::file_size(p)},
                       {"sha256", sha256_file(p)}});
}

void RunDir::commit(const std::string& command, const nlohmann::json& config, std::uint64_t seed,
                    const std::vector<std::string>& argv) {
    const auto finished = std::chrono::system_clock::now();
    std::vector<std::string> outputs = outputs_;
    std::sort(outputs.begin(), outputs.end());
    nlohmann::json m{{"tool", "plgate"},
                     {"command", command},
                     {"argv", argv},
                     {"config", config},
                     {"seed", seed},
                     {"inputs", inputs_},
                     {"outputs", outputs},
                     {"started_utc", utc_stamp(started_)},
                     {"finished_utc", utc_stamp(finished)},
                     {"elapsed_seconds", std::chrono::duration<double>(finished - started_).count()}};
    plgate::write_json(root_ / "manifest.json", m);
    committed_ = true;
}

void RunDir::rollback() noexcept {
    std::error_code ec;
    for (const auto& rel : outputs_) {
        fs::remove(root_ / rel, ec);
        fs::path tmp = root_ / rel;
        tmp += ".tmp";
        fs::remove(tmp, ec);
    }
    // Deepest first; only directories this run created and left empty.
    std::sort(created_dirs_.begin(), created_dirs_.end(),
              [](const fs::path& a, const fs::path& b) { return a.string().size() > b.string().size(); });
    for (const auto& d : created_dirs_) {
        if (fs::is_directory(d, ec) && fs::is_empty(d, ec)) {
            fs::remove(d, ec);
        }
    }
}

} // namespace plgate::cli
