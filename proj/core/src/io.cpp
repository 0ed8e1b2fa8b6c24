#include "plgate/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "plgate/error.hpp"

namespace plgate {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary artifacts assume a little-endian host");

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw Error("short write to " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

namespace {

class Writer {
public:
    template <typename T>
    void put(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void put_doubles(std::span<const double> v) {
        buf_.append(reinterpret_cast<const char*>(v.data()), v.size_bytes());
    }
    void put_string(std::string_view s) {
        put(static_cast<std::uint64_t>(s.size()));
        buf_.append(s);
    }
    void put_magic(std::string_view m) { buf_.append(m); }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string bytes, std::string what) : buf_(std::move(bytes)), what_(std::move(what)) {}

    template <typename T>
    T get() {
        T v;
        need(sizeof(T));
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void get_doubles(std::span<double> out) {
        need(out.size_bytes());
        std::memcpy(out.data(), buf_.data() + pos_, out.size_bytes());
        pos_ += out.size_bytes();
    }
    std::string get_string() {
        const auto n = get<std::uint64_t>();
        need(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void expect_magic(std::string_view m) {
        need(m.size());
        if (std::string_view(buf_).substr(pos_, m.size()) != m) {
            throw Error(what_ + ": bad magic, expected " + std::string(m));
        }
        pos_ += m.size();
    }
    void expect_end() const {
        if (pos_ != buf_.size()) {
            throw Error(what_ + ": trailing bytes");
        }
    }

private:
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) {
            throw Error(what_ + ": truncated file");
        }
    }

    std::string buf_;
    std::string what_;
    std::size_t pos_ = 0;
};

constexpr std::uint32_t kStackVersion = 1;
constexpr std::uint32_t kDatasetVersion = 1;

nlohmann::json stack_sidecar(const StackFile& f) {
    const auto& g = f.stacks.front().grid();
    std::vector<std::size_t> hist(f.class_count, 0);
    for (const int l : f.labels) {
        if (l >= 0 && static_cast<std::size_t>(l) < hist.size()) {
            ++hist[static_cast<std::size_t>(l)];
        }
    }
    return {{"format", "plgate-stacks"},
            {"version", kStackVersion},
            {"dataset", f.dataset},
            {"count", f.stacks.size()},
            {"levels", f.stacks.front().levels()},
            {"grid", {{"t_min", g.t_min}, {"t_max", g.t_max}, {"m", g.m}}},
            {"normalized", f.stacks.front().normalized()},
            {"class_count", f.class_count},
            {"class_histogram", hist},
            {"seed", f.seed}};
}

} // namespace

void write_stacks(const fs::path& path, const StackFile& f) {
    if (f.stacks.empty()) {
        throw Error("refusing to write an empty stack file");
    }
    if (f.labels.size() != f.stacks.size()) {
        throw Error("stack file needs one label per stack");
    }
    const auto& first = f.stacks.front();
    Writer w;
    w.put_magic("PLGSTK01");
    w.put(kStackVersion);
    w.put(static_cast<std::uint64_t>(f.stacks.size()));
    w.put(static_cast<std::uint32_t>(first.levels()));
    w.put(static_cast<std::uint32_t>(first.width()));
    w.put(first.grid().t_min);
    w.put(first.grid().t_max);
    w.put(static_cast<std::uint8_t>(first.normalized() ? 1 : 0));
    w.put_string(f.dataset);
    w.put(static_cast<std::uint64_t>(f.class_count));
    w.put(f.seed);
    for (const int l : f.labels) {
        w.put(static_cast<std::int32_t>(l));
    }
    for (const auto& s : f.stacks) {
        if (s.levels() != first.levels() || !(s.grid() == first.grid()) || s.normalized() != first.normalized()) {
            throw Error("all stacks in a file must share levels, grid and normalization");
        }
        w.put_doubles(s.data());
    }
    write_file_atomic(path, w.bytes());
    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    write_json(sidecar, stack_sidecar(f));
}

StackFile read_stacks(const fs::path& path) {
    Reader r(read_file(path), path.string());
    r.expect_magic("PLGSTK01");
    if (const auto v = r.get<std::uint32_t>(); v != kStackVersion) {
        throw Error(path.string() + ": unsupported stack file version " + std::to_string(v));
    }
    const auto count = r.get<std::uint64_t>();
    const auto K = r.get<std::uint32_t>();
    LandscapeGrid grid;
    grid.m = r.get<std::uint32_t>();
    grid.t_min = r.get<double>();
    grid.t_max = r.get<double>();
    const bool normalized = r.get<std::uint8_t>() != 0;
    grid.validate();
    StackFile f;
    f.dataset = r.get_string();
    f.class_count = r.get<std::uint64_t>();
    f.seed = r.get<std::uint64_t>();
    f.labels.resize(count);
    for (auto& l : f.labels) {
        l = r.get<std::int32_t>();
    }
    f.stacks.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        LandscapeStack s(K, grid, normalized);
        r.get_doubles(s.data());
        f.stacks.push_back(std::move(s));
    }
    r.expect_end();
    return f;
}

void write_dataset(const fs::path& path, const Dataset& d) {
    d.validate();
    Writer w;
    w.put_magic("PLGDATA1");
    w.put(kDatasetVersion);
    w.put_string(d.name);
    w.put(static_cast<std::uint64_t>(d.size()));
    w.put(static_cast<std::uint64_t>(d.length()));
    w.put(static_cast<std::uint64_t>(d.class_count));
    std::vector<double> lv = d.label_values;
    lv.resize(d.class_count, 0.0);
    w.put_doubles(lv);
    for (const auto& s : d.signals) {
        w.put(static_cast<std::int32_t>(*s.label));
        w.put_doubles(s.values);
    }
    write_file_atomic(path, w.bytes());
}

Dataset read_dataset(const fs::path& path) {
    Reader r(read_file(path), path.string());
    r.expect_magic("PLGDATA1");
    if (const auto v = r.get<std::uint32_t>(); v != kDatasetVersion) {
        throw Error(path.string() + ": unsupported dataset version " + std::to_string(v));
    }
    Dataset d;
    d.name = r.get_string();
    const auto count = r.get<std::uint64_t>();
    const auto length = r.get<std::uint64_t>();
    d.class_count = r.get<std::uint64_t>();
    d.label_values.resize(d.class_count);
    r.get_doubles(d.label_values);
    d.signals.resize(count);
    for (auto& s : d.signals) {
        s.label = r.get<std::int32_t>();
        s.values.resize(length);
        r.get_doubles(s.values);
    }
    r.expect_end();
    d.validate();
    return d;
}

void write_stack_csv(const fs::path& path, const LandscapeStack& ls) {
    std::ostringstream out;
    out << std::setprecision(17) << "t";
    for (std::size_t k = 1; k <= ls.levels(); ++k) {
        out << ",lambda_" << k;
    }
    out << '\n';
    for (std::size_t j = 0; j < ls.width(); ++j) {
        out << ls.grid().at(j);
        for (std::size_t k = 0; k < ls.levels(); ++k) {
            out << ',' << ls.at(k, j);
        }
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

} // namespace plgate
