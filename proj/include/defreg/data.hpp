#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace defreg {

struct CaseRecord {
    std::string id; // relative path stem, unique within its list
    std::filesystem::path image;
    std::vector<std::filesystem::path> labels; // channel k at index k
    std::string group;                         // grouped mode only
};

enum class DatasetMode { paired, unpaired, grouped };

struct DatasetIndex {
    DatasetMode mode = DatasetMode::unpaired;
    // unpaired/grouped: all images. paired: parallel fixed/moving lists.
    std::vector<CaseRecord> records;
    std::vector<CaseRecord> fixed_records;
    std::vector<CaseRecord> moving_records;
    // grouped: group id -> indices into records, ids sorted.
    std::map<std::string, std::vector<int>> groups;

    std::int64_t image_count() const;
};

enum class IntraGroupOption { forward, backward, unconstrained };

struct SamplerConfig {
    std::uint64_t seed = 0;
    IntraGroupOption intra_group = IntraGroupOption::unconstrained;
    bool label_stage = true;
};

struct SamplePair {
    int fixed_index = 0;  // into records (fixed_records in paired mode)
    int moving_index = 0; // into records (moving_records in paired mode)
    std::optional<int> fixed_label;
    std::optional<int> moving_label;
};

// Scans one of the three directory layouts:
//   paired:   fixed_images/ moving_images/ [fixed_labels/ moving_labels/]
//   unpaired: images/ [labels/]
//   grouped:  images/<group>/<file> [labels/<group>/<file>]
// Label channels are either one file per case or suffixed <id>_label<k>
// files. Ids are sorted lexicographically.
DatasetIndex scan_layout(const std::filesystem::path& root, DatasetMode mode);

struct SplitSpec {
    enum class Kind { ratio, kfold };
    Kind kind = Kind::ratio;
    double train = 0.8, val = 0.1, test = 0.1;
    int k = 5;
};

// Unit indices per partition. Units are pairs (paired), images (unpaired)
// or whole groups (grouped); a group never straddles partitions.
struct SplitResult {
    std::vector<std::vector<int>> partitions; // ratio: {train, val, test}
    std::vector<std::vector<int>> folds;      // kfold: validation fold per k
};

SplitResult split(const DatasetIndex& index, const SplitSpec& spec, std::uint64_t seed);

// One epoch of the staged sampler. The RNG stream is seeded from
// splitmix64(seed XOR epoch_number).
std::vector<SamplePair> epoch_pairs(const DatasetIndex& index, const SamplerConfig& config,
                                    std::uint64_t epoch_number);

// Aggregated draw counts over `epochs` epochs, serialized as JSON with
// sorted keys so identical inputs give byte-identical reports.
std::string sampler_report(const DatasetIndex& index, const SamplerConfig& config,
                           int epochs);

} // namespace defreg
