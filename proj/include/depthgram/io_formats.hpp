#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "depthgram/dataset.hpp"
#include "depthgram/engine.hpp"
#include "depthgram/synth.hpp"

/**
 * @file io_formats.hpp
 *
 * @brief HDFD dataset files, CSV ingestion and report serialization.
 *
 * HDFD layout, all integers and floats little-endian:
 *
 *   offset  size  field
 *   0       4     magic "HDFD"
 *   4       2     format version (u16, currently 1)
 *   6       4     n, observations (u32)
 *   10      8     p, dimensions (u64)
 *   18      4     N, time points (u32)
 *   22      2     time-grid flag (u16, 0 or 1)
 *   24      8N    time grid (f64), present only when the flag is 1
 *   ...     8npN  payload (f64): for j in 1..p, for i in 1..n, for k in 1..N
 *
 * Dimension j therefore starts at header_bytes + j n N 8.
 */

namespace depthgram {

inline constexpr std::array<char, 4> kHdfdMagic = {'H', 'D', 'F', 'D'};
inline constexpr std::uint16_t kHdfdVersion = 1;
inline constexpr std::size_t kHdfdFixedHeaderBytes = 24;

struct HdfdHeader {
    std::uint16_t version = kHdfdVersion;
    std::uint32_t n = 0;
    std::uint64_t p = 0;
    std::uint32_t N = 0;
    std::vector<double> grid;  ///< empty or N values

    std::uint64_t header_bytes() const { return kHdfdFixedHeaderBytes + 8 * grid.size(); }
    std::uint64_t payload_bytes() const { return 8ull * n * p * N; }
    std::uint64_t dimension_offset(std::uint64_t j) const { return header_bytes() + 8ull * j * n * N; }
};

/// Owning POSIX file descriptor.
class FileHandle {
public:
    FileHandle() = default;
    explicit FileHandle(int fd) : fd_(fd) {}
    FileHandle(FileHandle&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    FileHandle& operator=(FileHandle&& other) noexcept;
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
    ~FileHandle();

    int get() const { return fd_; }
    explicit operator bool() const { return fd_ >= 0; }

private:
    int fd_ = -1;
};

/// Sequential HDFD writer; dimensions must be written in order.
class HdfdWriter {
public:
    HdfdWriter(const std::filesystem::path& path, HdfdHeader header);

    void write_dimension(std::span<const double> block);

    /// Flushes and verifies that exactly p dimensions were written.
    void finish();

    const HdfdHeader& header() const { return header_; }
    /// FNV-1a 64 over the payload bytes written so far.
    std::uint64_t payload_checksum() const { return checksum_; }

private:
    std::filesystem::path path_;
    HdfdHeader header_;
    FileHandle file_;
    std::uint64_t written_ = 0;
    std::uint64_t checksum_ = 0xcbf29ce484222325ull;
};

/// Writes a whole dataset, asking `fill(j, block)` for each dimension in order.
void write_dataset(const std::filesystem::path& path, const HdfdHeader& header,
                   const std::function<void(std::size_t, std::span<double>)>& fill);

void write_dataset(const std::filesystem::path& path, const DimensionSource& source);

/**
 * @brief Read handle on an HDFD file.
 *
 * Positional reads make `read_dimension` safe from several threads; the
 * `next_dimension` cursor is for single-threaded streaming. Blocks are checked
 * for non-finite values.
 */
class HdfdDataset final : public DimensionSource {
public:
    static HdfdDataset open(const std::filesystem::path& path);

    const HdfdHeader& header() const { return header_; }
    const std::filesystem::path& path() const { return path_; }

    std::size_t observations() const override { return header_.n; }
    std::size_t dimensions() const override { return header_.p; }
    std::size_t time_points() const override { return header_.N; }
    std::span<const double> time_grid() const override { return header_.grid; }
    void read_dimension(std::size_t j, std::span<double> out) const override;

    bool has_next() const { return cursor_ < header_.p; }
    /// Next n x N block in storage order.
    std::vector<double> next_dimension();
    void rewind() { cursor_ = 0; }

private:
    HdfdDataset() = default;

    std::filesystem::path path_;
    HdfdHeader header_;
    FileHandle file_;
    std::size_t cursor_ = 0;
};

/// FNV-1a 64 hash, used for dataset and report checksums.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t state = 0xcbf29ce484222325ull);
std::uint64_t fnv1a(std::string_view text);

struct CsvLayout {
    char delimiter = ',';
    bool header_row = false;
};

/**
 * @brief Converts a directory of per-dimension CSV files into one HDFD file.
 *
 * Each file holds n rows by N columns. Files are ordered by the last run of
 * digits in their name (e.g. dim_0007.csv). Parsing is locale-independent.
 */
HdfdHeader import_csv(const std::filesystem::path& directory, const std::filesystem::path& output,
                      const CsvLayout& layout = {});

/// Parses one CSV matrix; `source` names the file in error messages.
std::vector<std::vector<double>> parse_csv_matrix(std::string_view text, const CsvLayout& layout,
                                                  std::string_view source = "<csv>");

/// Shortest decimal text that parses back to the same double; at most 17 significant digits.
std::string format_double(double value);

inline constexpr int kReportSchemaVersion = 1;

/// Analysis report as a JSON document. Wall-clock timing is left out unless requested.
std::string write_report(const AnalysisReport& report, bool include_timing = false);

/// Parses a report written by write_report (points, d-scores, thresholds, flags, outliers).
AnalysisReport read_report(std::string_view json_text);

struct DepthgramCsvRow {
    std::size_t observation = 0;  ///< 1-based
    Variant variant = Variant::dimensions;
    double dg1 = 0.0;
    double dg2 = 0.0;
    double d_score = 0.0;
    bool flagged = false;
};

/// Columns: observation,variant,dg1,dg2,d_score,flagged.
std::string write_depthgram_csv(const DepthGram& dg, bool with_header = true);
std::string write_depthgram_csv(const AnalysisReport& report);
std::vector<DepthgramCsvRow> read_depthgram_csv(std::string_view text);

/// Long format: observation,dimension,kind (1-based indices).
std::string write_marginal_csv(const MarginalFlags& flags);

std::string write_labels(const GroundTruth& truth);
GroundTruth read_labels(std::string_view json_text);

std::string write_study_csv(const StudySummary& summary);
std::string write_study_json(const StudySummary& summary);
std::string write_pooled_points_csv(const StudySummary& summary);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace depthgram
