#include "depthgram/io_formats.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little, "HDFD I/O assumes a little-endian host");

namespace depthgram {

using nlohmann::json;
namespace fs = std::filesystem;

FileHandle& FileHandle::operator=(FileHandle&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) {
            ::close(fd_);
        }
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

FileHandle::~FileHandle() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t state) {
    for (auto b : bytes) {
        state ^= static_cast<std::uint64_t>(b);
        state *= 0x100000001b3ull;
    }
    return state;
}

std::uint64_t fnv1a(std::string_view text) { return fnv1a(std::as_bytes(std::span(text.data(), text.size()))); }

namespace {

std::string system_error_text(const fs::path& path, std::string_view action) {
    return fmt::format("{} '{}': {}", action, path.string(), std::strerror(errno));
}

void write_all(int fd, const void* data, std::size_t size, const fs::path& path) {
    const auto* bytes = static_cast<const char*>(data);
    while (size > 0) {
        const ssize_t done = ::write(fd, bytes, size);
        if (done < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw DataError(system_error_text(path, "cannot write"));
        }
        bytes += done;
        size -= static_cast<std::size_t>(done);
    }
}

void read_all_at(int fd, void* data, std::size_t size, std::uint64_t offset, const fs::path& path) {
    auto* bytes = static_cast<char*>(data);
    while (size > 0) {
        const ssize_t done = ::pread(fd, bytes, size, static_cast<off_t>(offset));
        if (done < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw DataError(system_error_text(path, "cannot read"));
        }
        if (done == 0) {
            throw DataError(fmt::format("unexpected end of file in '{}' at byte {}", path.string(), offset));
        }
        bytes += done;
        size -= static_cast<std::size_t>(done);
        offset += static_cast<std::uint64_t>(done);
    }
}

template <class T>
void put(std::vector<unsigned char>& out, T value) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <class T>
T get(const unsigned char* in) {
    T value;
    std::memcpy(&value, in, sizeof(T));
    return value;
}

void validate_header(const HdfdHeader& header) {
    if (header.version != kHdfdVersion) {
        throw std::invalid_argument(fmt::format("unsupported HDFD version {}", header.version));
    }
    if (header.n == 0 || header.p == 0 || header.N == 0) {
        throw std::invalid_argument("HDFD header needs positive n, p and N");
    }
    if (!header.grid.empty() && header.grid.size() != header.N) {
        throw std::invalid_argument("HDFD time grid length does not match N");
    }
}

}  // namespace

HdfdWriter::HdfdWriter(const fs::path& path, HdfdHeader header) : path_(path), header_(std::move(header)) {
    validate_header(header_);
    file_ = FileHandle(::open(path_.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
    if (!file_) {
        throw DataError(system_error_text(path_, "cannot create"));
    }
    std::vector<unsigned char> bytes(kHdfdMagic.begin(), kHdfdMagic.end());
    put<std::uint16_t>(bytes, header_.version);
    put<std::uint32_t>(bytes, header_.n);
    put<std::uint64_t>(bytes, header_.p);
    put<std::uint32_t>(bytes, header_.N);
    put<std::uint16_t>(bytes, header_.grid.empty() ? 0 : 1);
    for (double t : header_.grid) {
        put<double>(bytes, t);
    }
    write_all(file_.get(), bytes.data(), bytes.size(), path_);
}

void HdfdWriter::write_dimension(std::span<const double> block) {
    if (written_ >= header_.p) {
        throw std::logic_error("all declared dimensions have already been written");
    }
    if (block.size() != std::size_t{header_.n} * header_.N) {
        throw std::invalid_argument("dimension block has the wrong size");
    }
    for (std::size_t q = 0; q < block.size(); ++q) {
        if (!std::isfinite(block[q])) {
            throw DataError(fmt::format("non-finite value at observation {}, dimension {}, time point {}",
                                        q / header_.N + 1, written_ + 1, q % header_.N + 1));
        }
    }
    const auto bytes = std::as_bytes(block);
    write_all(file_.get(), bytes.data(), bytes.size(), path_);
    checksum_ = fnv1a(bytes, checksum_);
    ++written_;
}

void HdfdWriter::finish() {
    if (written_ != header_.p) {
        throw std::logic_error(fmt::format("HDFD writer received {} of {} dimensions", written_, header_.p));
    }
    if (::fsync(file_.get()) != 0 && errno != EINVAL) {
        throw DataError(system_error_text(path_, "cannot flush"));
    }
    file_ = FileHandle();
}

void write_dataset(const fs::path& path, const HdfdHeader& header,
                   const std::function<void(std::size_t, std::span<double>)>& fill) {
    HdfdWriter writer(path, header);
    std::vector<double> block(std::size_t{header.n} * header.N);
    for (std::size_t j = 0; j < header.p; ++j) {
        fill(j, block);
        writer.write_dimension(block);
    }
    writer.finish();
}

void write_dataset(const fs::path& path, const DimensionSource& source) {
    HdfdHeader header;
    header.n = static_cast<std::uint32_t>(source.observations());
    header.p = source.dimensions();
    header.N = static_cast<std::uint32_t>(source.time_points());
    const auto grid = source.time_grid();
    header.grid.assign(grid.begin(), grid.end());
    write_dataset(path, header, [&](std::size_t j, std::span<double> block) { source.read_dimension(j, block); });
}

HdfdDataset HdfdDataset::open(const fs::path& path) {
    HdfdDataset ds;
    ds.path_ = path;
    ds.file_ = FileHandle(::open(path.c_str(), O_RDONLY | O_CLOEXEC));
    if (!ds.file_) {
        throw DataError(system_error_text(path, "cannot open"));
    }
    struct stat info {};
    if (::fstat(ds.file_.get(), &info) != 0) {
        throw DataError(system_error_text(path, "cannot stat"));
    }
    const auto file_size = static_cast<std::uint64_t>(info.st_size);
    if (file_size < kHdfdFixedHeaderBytes) {
        throw DataError(fmt::format("'{}' is too short for an HDFD header ({} bytes)", path.string(), file_size));
    }
    unsigned char raw[kHdfdFixedHeaderBytes];
    read_all_at(ds.file_.get(), raw, sizeof raw, 0, path);
    if (!std::equal(kHdfdMagic.begin(), kHdfdMagic.end(), raw)) {
        throw DataError(fmt::format("'{}' is not an HDFD file (bad magic)", path.string()));
    }
    auto& h = ds.header_;
    h.version = get<std::uint16_t>(raw + 4);
    if (h.version != kHdfdVersion) {
        throw DataError(fmt::format("'{}' has unsupported HDFD version {} (expected {})", path.string(), h.version,
                                    kHdfdVersion));
    }
    h.n = get<std::uint32_t>(raw + 6);
    h.p = get<std::uint64_t>(raw + 10);
    h.N = get<std::uint32_t>(raw + 18);
    const auto grid_flag = get<std::uint16_t>(raw + 22);
    if (h.n == 0 || h.p == 0 || h.N == 0) {
        throw DataError(fmt::format("'{}' declares an empty dataset (n={}, p={}, N={})", path.string(), h.n, h.p, h.N));
    }
    if (grid_flag > 1) {
        throw DataError(fmt::format("'{}' has invalid time-grid flag {}", path.string(), grid_flag));
    }
    if (h.p > (std::numeric_limits<std::uint64_t>::max() / 8) / (std::uint64_t{h.n} * h.N)) {
        throw DataError(fmt::format("'{}' declares an impossibly large payload", path.string()));
    }
    const std::uint64_t grid_bytes = grid_flag ? 8ull * h.N : 0;
    if (file_size < kHdfdFixedHeaderBytes + grid_bytes) {
        throw DataError(fmt::format("'{}' is truncated inside the time grid", path.string()));
    }
    if (grid_flag) {
        h.grid.resize(h.N);
        read_all_at(ds.file_.get(), h.grid.data(), grid_bytes, kHdfdFixedHeaderBytes, path);
        for (std::size_t k = 0; k < h.N; ++k) {
            if (!std::isfinite(h.grid[k])) {
                throw DataError(fmt::format("'{}' has a non-finite time grid value at time point {}", path.string(), k + 1));
            }
        }
    }
    const std::uint64_t expected = h.payload_bytes();
    const std::uint64_t actual = file_size - h.header_bytes();
    if (actual < expected) {
        throw DataError(fmt::format("'{}' has a truncated payload: expected {} bytes, found {}", path.string(), expected,
                                    actual));
    }
    if (actual > expected) {
        throw DataError(fmt::format("'{}' has {} trailing bytes after the payload of {} bytes", path.string(),
                                    actual - expected, expected));
    }
    return ds;
}

void HdfdDataset::read_dimension(std::size_t j, std::span<double> out) const {
    const std::size_t n = header_.n;
    const std::size_t N = header_.N;
    if (j >= header_.p) {
        throw std::out_of_range(fmt::format("dimension {} out of range", j));
    }
    if (out.size() != n * N) {
        throw std::invalid_argument("dimension buffer has the wrong size");
    }
    read_all_at(file_.get(), out.data(), out.size_bytes(), header_.dimension_offset(j), path_);
    for (std::size_t q = 0; q < out.size(); ++q) {
        if (!std::isfinite(out[q])) {
            throw DataError(fmt::format("non-finite value at observation {}, dimension {}, time point {} in '{}'",
                                        q / N + 1, j + 1, q % N + 1, path_.string()));
        }
    }
}

std::vector<double> HdfdDataset::next_dimension() {
    if (!has_next()) {
        throw std::out_of_range("no dimensions left in the stream");
    }
    std::vector<double> block(block_size());
    read_dimension(cursor_, block);
    ++cursor_;
    return block;
}

std::string format_double(double value) {
    char buffer[64];
    auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    // Large integral values come out in full fixed notation; keep them to 17 significant digits.
    if (std::abs(value) >= 1e17) {
        result = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::scientific);
    }
    return std::string(buffer, result.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        const std::size_t stop = end == std::string_view::npos ? text.size() : end;
        std::string_view line = text.substr(start, stop - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        if (end == std::string_view::npos) {
            break;
        }
        start = end + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) {
        lines.pop_back();
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = line.find(delimiter, start);
        if (end == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, end - start));
        start = end + 1;
    }
}

bool parse_number(std::string_view cell, double& value) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    if (cell.empty()) {
        return false;
    }
    const auto result = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    return result.ec == std::errc() && result.ptr == cell.data() + cell.size() && std::isfinite(value);
}

template <class Int>
bool parse_integer(std::string_view cell, Int& value) {
    cell = trim(cell);
    const auto result = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    return !cell.empty() && result.ec == std::errc() && result.ptr == cell.data() + cell.size();
}

/// Last run of decimal digits in a file name, used to order dimension files.
std::optional<std::uint64_t> trailing_index(const std::string& name) {
    const auto last = name.find_last_of("0123456789");
    if (last == std::string::npos) {
        return std::nullopt;
    }
    auto first = last;
    while (first > 0 && std::isdigit(static_cast<unsigned char>(name[first - 1]))) {
        --first;
    }
    std::uint64_t index = 0;
    if (!parse_integer(std::string_view(name).substr(first, last - first + 1), index)) {
        return std::nullopt;
    }
    return index;
}

}  // namespace

std::vector<std::vector<double>> parse_csv_matrix(std::string_view text, const CsvLayout& layout,
                                                  std::string_view source) {
    const auto lines = split_lines(text);
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    for (std::size_t r = layout.header_row ? 1 : 0; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r], layout.delimiter);
        if (rows.empty()) {
            width = fields.size();
        } else if (fields.size() != width) {
            throw DataError(fmt::format("{}: ragged row {} has {} columns, expected {}", source, r + 1, fields.size(),
                                        width));
        }
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (!parse_number(fields[c], row[c])) {
                throw DataError(fmt::format("{}: row {}, column {}: cannot parse '{}' as a finite number", source, r + 1,
                                            c + 1, trim(fields[c])));
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw DataError(fmt::format("{}: no data rows", source));
    }
    return rows;
}

HdfdHeader import_csv(const fs::path& directory, const fs::path& output, const CsvLayout& layout) {
    if (!fs::is_directory(directory)) {
        throw DataError(fmt::format("'{}' is not a directory", directory.string()));
    }
    std::map<std::uint64_t, fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".csv") {
            continue;
        }
        const auto name = entry.path().filename().string();
        const auto index = trailing_index(entry.path().stem().string());
        if (!index) {
            throw DataError(fmt::format("'{}' has no dimension index in its name", name));
        }
        if (!files.emplace(*index, entry.path()).second) {
            throw DataError(fmt::format("dimension index {} appears in more than one file ('{}', '{}')", *index,
                                        files[*index].filename().string(), name));
        }
    }
    if (files.empty()) {
        throw DataError(fmt::format("no .csv files in '{}'", directory.string()));
    }

    std::optional<HdfdWriter> writer;
    HdfdHeader header;
    std::vector<double> block;
    for (const auto& [index, path] : files) {
        const auto name = path.filename().string();
        const auto rows = parse_csv_matrix(read_text_file(path), layout, name);
        if (!writer) {
            header.n = static_cast<std::uint32_t>(rows.size());
            header.p = files.size();
            header.N = static_cast<std::uint32_t>(rows.front().size());
            writer.emplace(output, header);
        } else if (rows.size() != header.n || rows.front().size() != header.N) {
            throw DataError(fmt::format("{}: shape {} x {} does not match {} x {} of the first file", name, rows.size(),
                                        rows.front().size(), header.n, header.N));
        }
        block.clear();
        for (const auto& row : rows) {
            block.insert(block.end(), row.begin(), row.end());
        }
        writer->write_dimension(block);
    }
    writer->finish();
    return header;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::size_t> one_based(const std::vector<std::size_t>& indices) {
    std::vector<std::size_t> out(indices.size());
    std::transform(indices.begin(), indices.end(), out.begin(), [](std::size_t i) { return i + 1; });
    return out;
}

std::vector<std::uint32_t> one_based(const std::vector<std::uint32_t>& indices) {
    std::vector<std::uint32_t> out(indices.size());
    std::transform(indices.begin(), indices.end(), out.begin(), [](std::uint32_t i) { return i + 1; });
    return out;
}

std::vector<std::uint32_t> zero_based(const json& indices, std::string_view what) {
    std::vector<std::uint32_t> out;
    for (const auto& v : indices) {
        const auto i = v.get<std::uint64_t>();
        if (i == 0) {
            throw DataError(fmt::format("{} index 0 in a 1-based list", what));
        }
        out.push_back(static_cast<std::uint32_t>(i - 1));
    }
    return out;
}

json depthgram_json(const DepthGram& dg) {
    json out;
    out["variant"] = variant_name(dg.variant);
    out["m"] = dg.m;
    out["F"] = dg.F;
    out["threshold"] = dg.threshold;
    out["flagged"] = one_based(dg.flagged());
    out["dg1"] = dg.dg1;
    out["dg2"] = dg.dg2;
    out["d_scores"] = dg.d_scores;
    out["mei_numerators"] = dg.mei_numerators;
    out["mbd_numerators"] = dg.mbd_numerators;
    return out;
}

json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(fmt::format("malformed {} JSON: {}", what, e.what()));
    }
}

}  // namespace

std::string write_report(const AnalysisReport& report, bool include_timing) {
    json out;
    out["schema"] = "depthgram-report";
    out["schema_version"] = kReportSchemaVersion;
    out["n"] = report.n;
    out["p"] = report.p;
    out["N"] = report.N;
    out["F"] = report.F;
    out["outliers"] = one_based(report.outliers);
    json provenance = json::array();
    for (auto i : report.outliers) {
        json names = json::array();
        for (auto v : report.provenance(i)) {
            names.push_back(variant_name(v));
        }
        provenance.push_back({{"observation", i + 1}, {"variants", names}});
    }
    out["provenance"] = provenance;
    out["sign_chain"] = {{"flipped_dimensions", report.flipped_dimensions}, {"negative_steps", report.negative_steps}};
    json dgs = json::array();
    for (const auto& dg : report.depthgrams) {
        dgs.push_back(depthgram_json(dg));
    }
    out["depthgrams"] = dgs;
    if (report.marginal) {
        const auto& m = *report.marginal;
        json magnitude = json::array(), shape = json::array();
        for (std::size_t i = 0; i < m.observations(); ++i) {
            magnitude.push_back(one_based(m.magnitude_dims[i]));
            shape.push_back(one_based(m.shape_dims[i]));
        }
        out["marginal"] = {{"magnitude_dimensions", magnitude},
                           {"shape_dimensions", shape},
                           {"magnitude_count", m.magnitude_count},
                           {"shape_count", m.shape_count}};
    }
    if (include_timing) {
        out["elapsed_seconds"] = report.elapsed_seconds;
    }
    return out.dump(1) + "\n";
}

AnalysisReport read_report(std::string_view json_text) {
    const json doc = parse_json(json_text, "report");
    try {
        if (doc.at("schema").get<std::string>() != "depthgram-report") {
            throw DataError("document is not a depthgram report");
        }
        const int version = doc.at("schema_version").get<int>();
        if (version != kReportSchemaVersion) {
            throw DataError(fmt::format("unsupported report schema version {}", version));
        }
        AnalysisReport report;
        report.n = doc.at("n").get<std::size_t>();
        report.p = doc.at("p").get<std::size_t>();
        report.N = doc.at("N").get<std::size_t>();
        report.F = doc.at("F").get<double>();
        for (auto i : zero_based(doc.at("outliers"), "outlier")) {
            report.outliers.push_back(i);
        }
        report.flipped_dimensions = doc.at("sign_chain").at("flipped_dimensions").get<std::size_t>();
        report.negative_steps = doc.at("sign_chain").at("negative_steps").get<std::size_t>();
        const auto& dgs = doc.at("depthgrams");
        if (dgs.size() != kVariants.size()) {
            throw DataError("report must hold exactly three DepthGrams");
        }
        for (std::size_t v = 0; v < kVariants.size(); ++v) {
            const auto& src = dgs[v];
            const auto variant = parse_variant(src.at("variant").get<std::string>());
            if (!variant || *variant != kVariants[v]) {
                throw DataError("DepthGrams are missing or out of order");
            }
            DepthGram& dg = report.depthgrams[v];
            dg.variant = *variant;
            dg.n = report.n;
            dg.m = src.at("m").get<std::size_t>();
            dg.F = src.at("F").get<double>();
            dg.threshold = src.at("threshold").get<double>();
            dg.dg1 = src.at("dg1").get<std::vector<double>>();
            dg.dg2 = src.at("dg2").get<std::vector<double>>();
            dg.d_scores = src.at("d_scores").get<std::vector<double>>();
            dg.mei_numerators = src.at("mei_numerators").get<std::vector<std::uint64_t>>();
            dg.mbd_numerators = src.at("mbd_numerators").get<std::vector<std::uint64_t>>();
            if (dg.dg1.size() != report.n || dg.dg2.size() != report.n || dg.d_scores.size() != report.n) {
                throw DataError(fmt::format("{} DepthGram has the wrong number of points", variant_name(dg.variant)));
            }
            dg.flags.assign(report.n, false);
            for (auto i : zero_based(src.at("flagged"), "flagged")) {
                if (i >= report.n) {
                    throw DataError("flagged observation out of range");
                }
                dg.flags[i] = true;
            }
        }
        if (doc.contains("marginal")) {
            const auto& src = doc.at("marginal");
            MarginalFlags m(report.n, report.p);
            const auto& magnitude = src.at("magnitude_dimensions");
            const auto& shape = src.at("shape_dimensions");
            if (magnitude.size() != report.n || shape.size() != report.n) {
                throw DataError("marginal flags have the wrong number of observations");
            }
            for (std::size_t i = 0; i < report.n; ++i) {
                m.magnitude_dims[i] = zero_based(magnitude[i], "dimension");
                m.shape_dims[i] = zero_based(shape[i], "dimension");
            }
            m.magnitude_count = src.at("magnitude_count").get<std::vector<std::uint32_t>>();
            m.shape_count = src.at("shape_count").get<std::vector<std::uint32_t>>();
            report.marginal = std::move(m);
        }
        if (doc.contains("elapsed_seconds")) {
            report.elapsed_seconds = doc.at("elapsed_seconds").get<double>();
        }
        return report;
    } catch (const json::exception& e) {
        throw DataError(fmt::format("invalid report: {}", e.what()));
    }
}

namespace {

constexpr std::string_view kDepthgramCsvHeader = "observation,variant,dg1,dg2,d_score,flagged";

void append_depthgram_rows(std::string& out, const DepthGram& dg) {
    for (std::size_t i = 0; i < dg.dg1.size(); ++i) {
        const bool flagged = i < dg.flags.size() && dg.flags[i];
        out += fmt::format("{},{},{},{},{},{}\n", i + 1, variant_name(dg.variant), format_double(dg.dg1[i]),
                           format_double(dg.dg2[i]), format_double(dg.d_scores[i]), flagged ? 1 : 0);
    }
}

}  // namespace

std::string write_depthgram_csv(const DepthGram& dg, bool with_header) {
    std::string out;
    if (with_header) {
        out += kDepthgramCsvHeader;
        out += '\n';
    }
    append_depthgram_rows(out, dg);
    return out;
}

std::string write_depthgram_csv(const AnalysisReport& report) {
    std::string out(kDepthgramCsvHeader);
    out += '\n';
    for (const auto& dg : report.depthgrams) {
        append_depthgram_rows(out, dg);
    }
    return out;
}

std::vector<DepthgramCsvRow> read_depthgram_csv(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) {
        throw DataError("DepthGram CSV is empty");
    }
    if (trim(lines.front()) != kDepthgramCsvHeader) {
        throw DataError(fmt::format("DepthGram CSV header must be '{}'", kDepthgramCsvHeader));
    }
    std::vector<DepthgramCsvRow> rows;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r], ',');
        if (fields.size() != 6) {
            throw DataError(fmt::format("DepthGram CSV line {}: expected 6 fields, found {}", r + 1, fields.size()));
        }
        DepthgramCsvRow row;
        const auto variant = parse_variant(trim(fields[1]));
        int flagged = 0;
        if (!parse_integer(fields[0], row.observation) || row.observation == 0 || !variant ||
            !parse_number(fields[2], row.dg1) || !parse_number(fields[3], row.dg2) ||
            !parse_number(fields[4], row.d_score) || !parse_integer(fields[5], flagged) || flagged < 0 ||
            flagged > 1) {
            throw DataError(fmt::format("DepthGram CSV line {}: malformed row '{}'", r + 1, lines[r]));
        }
        row.variant = *variant;
        row.flagged = flagged == 1;
        rows.push_back(row);
    }
    if (rows.empty()) {
        throw DataError("DepthGram CSV has no data rows");
    }
    return rows;
}

std::string write_marginal_csv(const MarginalFlags& flags) {
    std::string out = "observation,dimension,kind\n";
    for (std::size_t i = 0; i < flags.observations(); ++i) {
        for (auto j : flags.magnitude_dims[i]) {
            out += fmt::format("{},{},magnitude\n", i + 1, j + 1);
        }
        for (auto j : flags.shape_dims[i]) {
            out += fmt::format("{},{},shape\n", i + 1, j + 1);
        }
    }
    return out;
}

std::string write_labels(const GroundTruth& truth) {
    json out;
    out["schema"] = "depthgram-labels";
    out["schema_version"] = 1;
    out["model"] = truth.model;
    out["n"] = truth.n;
    out["p"] = truth.p;
    out["N"] = truth.N;
    out["c"] = truth.c;
    out["seed"] = truth.seed;
    json observations = json::array();
    for (std::size_t i = 0; i < truth.n; ++i) {
        json o;
        o["observation"] = i + 1;
        o["type"] = outlier_type_name(truth.nominal[i]);
        o["effective_type"] = outlier_type_name(truth.effective(i));
        o["alpha"] = truth.alphas[i];
        o["contaminated_dimensions"] = one_based(truth.contaminated[i]);
        if (!truth.joint_refs[i].empty()) {
            o["joint_references"] = one_based(truth.joint_refs[i]);
        }
        observations.push_back(std::move(o));
    }
    out["observations"] = std::move(observations);
    return out.dump() + "\n";
}

GroundTruth read_labels(std::string_view json_text) {
    const json doc = parse_json(json_text, "labels");
    try {
        if (doc.at("schema").get<std::string>() != "depthgram-labels") {
            throw DataError("document is not a labels file");
        }
        GroundTruth truth;
        truth.model = doc.at("model").get<int>();
        truth.n = doc.at("n").get<std::size_t>();
        truth.p = doc.at("p").get<std::size_t>();
        truth.N = doc.at("N").get<std::size_t>();
        truth.c = doc.at("c").get<double>();
        truth.seed = doc.at("seed").get<std::uint64_t>();
        const auto& observations = doc.at("observations");
        if (observations.size() != truth.n) {
            throw DataError("labels list the wrong number of observations");
        }
        truth.nominal.resize(truth.n);
        truth.alphas.resize(truth.n);
        truth.contaminated.resize(truth.n);
        truth.joint_refs.resize(truth.n);
        for (std::size_t i = 0; i < truth.n; ++i) {
            const auto& o = observations[i];
            truth.nominal[i] = parse_outlier_type(o.at("type").get<std::string>());
            truth.alphas[i] = o.at("alpha").get<double>();
            truth.contaminated[i] = zero_based(o.at("contaminated_dimensions"), "dimension");
            if (o.contains("joint_references")) {
                truth.joint_refs[i] = zero_based(o.at("joint_references"), "observation");
            }
        }
        return truth;
    } catch (const json::exception& e) {
        throw DataError(fmt::format("invalid labels: {}", e.what()));
    } catch (const std::invalid_argument& e) {
        throw DataError(fmt::format("invalid labels: {}", e.what()));
    }
}

namespace {

struct NamedStat {
    std::string_view name;
    RateStat ConfigSummary::*member;
};

constexpr std::array<NamedStat, 8> kStudyStats = {{
    {"dg_magnitude_pc", &ConfigSummary::dg_magnitude},
    {"dg_shape_pc", &ConfigSummary::dg_shape},
    {"dg_joint_pc", &ConfigSummary::dg_joint},
    {"dg_pf", &ConfigSummary::dg_false},
    {"marginal_magnitude_pc", &ConfigSummary::marginal_magnitude_pc},
    {"marginal_magnitude_pf", &ConfigSummary::marginal_magnitude_pf},
    {"marginal_shape_pc", &ConfigSummary::marginal_shape_pc},
    {"marginal_shape_pf", &ConfigSummary::marginal_shape_pf},
}};

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

}  // namespace

std::string write_study_csv(const StudySummary& summary) {
    std::string out = "model,p,c,replicates";
    for (const auto& stat : kStudyStats) {
        out += fmt::format(",{0}_mean,{0}_sd", stat.name);
    }
    out += '\n';
    for (const auto& row : summary.rows) {
        out += fmt::format("{},{},{},{}", summary.config.model, summary.config.p, format_double(row.c), row.replicates);
        for (const auto& stat : kStudyStats) {
            const RateStat& s = row.*stat.member;
            out += fmt::format(",{},{}", csv_number(s.mean), csv_number(s.sd));
        }
        out += '\n';
    }
    return out;
}

std::string write_study_json(const StudySummary& summary) {
    const auto& c = summary.config;
    json out;
    out["schema"] = "depthgram-study";
    out["schema_version"] = 1;
    out["config"] = {{"model", c.model}, {"n", c.n},       {"p", c.p},
                     {"N", c.N},         {"c_grid", c.c_grid}, {"replicates", c.replicates},
                     {"seed", c.seed},   {"F", c.F},       {"marginal", c.marginal}};
    json rows = json::array();
    for (const auto& row : summary.rows) {
        json r;
        r["c"] = row.c;
        r["replicates"] = row.replicates;
        for (const auto& stat : kStudyStats) {
            const RateStat& s = row.*stat.member;
            r[std::string(stat.name)] = {{"mean", number_or_null(s.mean)}, {"sd", number_or_null(s.sd)}, {"count", s.count}};
        }
        rows.push_back(std::move(r));
    }
    out["rows"] = std::move(rows);
    return out.dump(1) + "\n";
}

std::string write_pooled_points_csv(const StudySummary& summary) {
    std::string out = "c,replicate,observation,class,variant,dg1,dg2,flagged\n";
    for (const auto& pt : summary.points) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", format_double(pt.c), pt.replicate + 1, pt.observation + 1,
                           outlier_type_name(pt.cls), variant_name(pt.variant), format_double(pt.dg1),
                           format_double(pt.dg2), pt.flagged ? 1 : 0);
    }
    return out;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open '{}'", path.string()));
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw DataError(fmt::format("cannot read '{}'", path.string()));
    }
    return buffer.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError(fmt::format("cannot create '{}'", path.string()));
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
        throw DataError(fmt::format("cannot write '{}'", path.string()));
    }
}

}  // namespace depthgram
