#pragma once

// Dataset container shared by the benchmark generators, the adaptation
// loops, and the dataset file formats (JSON text and compact binary).

#include <cstdint>
#include <string>
#include <vector>

#include "gradapt/mat.hpp"

namespace gradapt {

struct LabeledDataset {
    MatF features;                    // n x d, row-major
    std::vector<int> labels;          // size n, or empty when unlabeled
    std::vector<float> shift_values;  // size n perturbation magnitudes, or empty
    int num_classes = 0;

    int size() const { return features.rows; }
    int dim() const { return features.cols; }
    bool has_labels() const { return !labels.empty(); }
    bool has_shift() const { return !shift_values.empty(); }

    // Throws ShapeError on inconsistent sizes or out-of-range labels.
    void validate() const;
};

// Subset by row indices; labels and shift values follow when present.
LabeledDataset select_examples(const LabeledDataset& data, const std::vector<int>& idx);

// Copy with the labels array removed (adaptation sees unlabeled targets).
LabeledDataset strip_labels(const LabeledDataset& data);

// One-hot rows for a label vector.
MatF one_hot(const std::vector<int>& labels, int num_classes);

// ---------------------------------------------------------------------------
// File formats. The binary layout (all little-endian):
//   magic "GDA1" | u32 version=1 | u32 n | u32 d | u32 k
//   | u8 has_labels | u8 has_shift | u16 reserved=0
//   | f32[n*d] features row-major | i32[n] labels? | f32[n] shift?
// The JSON variant mirrors the same fields with flat arrays.
// ---------------------------------------------------------------------------

void save_dataset_binary(const LabeledDataset& data, const std::string& path);
LabeledDataset load_dataset_binary(const std::string& path);

void save_dataset_json(const LabeledDataset& data, const std::string& path);
LabeledDataset load_dataset_json(const std::string& path);

// Dispatch on extension: ".json" is text, anything else binary.
void save_dataset(const LabeledDataset& data, const std::string& path);
// Dispatch on content: sniffs the binary magic, falls back to JSON.
LabeledDataset load_dataset(const std::string& path);

}  // namespace gradapt
