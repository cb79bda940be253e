#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "gradapt/nn.hpp"
#include "gradapt/shift_bench.hpp"

namespace gradapt {

// One diagnostic row per (teacher update, evaluation bin). Adaptation runs
// append a block of rows after every teacher promotion; bin_id -1 marks a
// whole-set row used when no binned evaluation data is attached, in which
// case accuracy is -1 (the adaptation target carries no labels) and only the
// confidence column is meaningful.
struct TraceRow {
    int update_index = 0;         // 1-based teacher update counter
    double lambda_or_round = 0.0; // interpolation coefficient, or round index
    int bin_id = -1;
    float bin_lo = 0.0f;
    float bin_hi = 0.0f;
    double accuracy = -1.0;       // negative = no labeled evaluation data
    double mean_confidence = 0.0;
    double retained_fraction = 0.0;
};

struct CurriculumTrace {
    std::vector<TraceRow> rows;

    // Distinct teacher updates recorded (rows are grouped per update).
    int num_updates() const;
};

// Appends the diagnostic block for one teacher update. With eval bins, one
// row per bin (accuracy + mean confidence on the bin); otherwise a single
// whole-set row whose confidence is measured on target_inputs.
void append_trace_rows(CurriculumTrace& trace, int update_index, double lambda_or_round, const NetworkF& net,
                       const MatF& target_inputs, const ShiftBins* eval_bins, double retained_fraction);

// CSV with a fixed documented header; one line per row.
void write_trace_csv(const CurriculumTrace& trace, std::ostream& out);
void write_trace_csv(const CurriculumTrace& trace, const std::string& path);

}  // namespace gradapt
