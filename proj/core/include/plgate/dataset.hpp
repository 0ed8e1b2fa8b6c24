#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "plgate/signal.hpp"

namespace plgate {

/// Equal-length labelled signals. Labels are dense ids in [0, class_count);
/// `label_values` maps each id back to the label spelled in the source file.
struct Dataset {
    std::string name;
    std::vector<Signal> signals;
    std::size_t class_count = 0;
    std::vector<double> label_values;

    std::size_t size() const noexcept { return signals.size(); }
    std::size_t length() const noexcept { return signals.empty() ? 0 : signals.front().size(); }
    std::vector<std::size_t> class_histogram() const;
    std::vector<int> labels() const;

    /// Throws unless lengths agree and every label is in range.
    void validate() const;
};

/// Loads a UCR-archive file (label, then values; tab, comma or blank
/// separated) and standardizes every signal. If `path` is not a file, the
/// files `<path>_TRAIN.<ext>` and `<path>_TEST.<ext>` (ext in tsv, csv, txt)
/// are loaded and merged. Labels are renumbered 0..C-1 in ascending order.
Dataset load_ucr(const std::filesystem::path& path);
Dataset load_ucr(std::span<const std::filesystem::path> files, std::string name);

/// Pre-segmented MIT-BIH heartbeat CSV: 187 samples then a label in 0..4 per
/// row. Signals are standardized.
Dataset load_mitbih_csv(const std::filesystem::path& path);

inline constexpr std::size_t kMitBihBeatLength = 187;
inline constexpr std::size_t kMitBihClasses = 5;

/// Pads each signal with zeros up to `target_length`, splitting the padding
/// between front and back uniformly at random.
Dataset shift_augment(const Dataset& d, std::size_t target_length, std::uint64_t seed);

/// Stratified assignment of samples to folds.
struct FoldPlan {
    std::vector<std::size_t> fold_of;
    std::size_t folds = 0;
    std::uint64_t seed = 0;

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Shuffles each class with `seed` and deals its members round-robin, so
/// per-class counts differ by at most one across folds. Throws if a class
/// present in `d` has fewer than `folds` members.
FoldPlan make_folds(const Dataset& d, std::size_t folds, std::uint64_t seed);
FoldPlan make_folds(std::span<const int> labels, std::size_t class_count, std::size_t folds, std::uint64_t seed);

/// Single stratified split: fold 0 is the held-out part, fold 1 the training
/// part, with round(train_fraction * n_c) training samples per class.
FoldPlan make_holdout(const Dataset& d, double train_fraction, std::uint64_t seed);
FoldPlan make_holdout(std::span<const int> labels, std::size_t class_count, double train_fraction,
                      std::uint64_t seed);

} // namespace plgate
