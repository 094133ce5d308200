#pragma once

// JSON container for a trained feature extractor, its hyperparameters, the
// normalization it was trained under, and any task classifiers fitted on it.
// Doubles are written in shortest round-trip form, so a save/load cycle is exact.

#include <iosfwd>
#include <string>
#include <vector>

#include "dacae/classifiers.hpp"
#include "dacae/data.hpp"
#include "dacae/model.hpp"

namespace dacae {

struct Checkpoint {
    DacaeParams params;
    HyperConfig config;
    Normalization normalization;
    std::vector<FittedClassifier> classifiers;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

/// Throws IoError on unreadable or malformed content.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

/// Canonical text of the checkpoint; equal strings mean bit-identical content.
std::string checkpoint_text(const Checkpoint& checkpoint);

} // namespace dacae
