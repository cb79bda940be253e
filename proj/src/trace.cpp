#include "gradapt/trace.hpp"

#include <fstream>
#include <stdexcept>

#include "gradapt/self_train.hpp"

namespace gradapt {

int CurriculumTrace::num_updates() const {
    int count = 0;
    int last = -1;
    for (const TraceRow& row : rows) {
        if (row.update_index != last) {
            ++count;
            last = row.update_index;
        }
    }
    return count;
}

namespace {

double mean_confidence_on(const NetworkF& net, const MatF& x) {
    if (x.rows == 0) return 0.0;
    const std::vector<float> scores = confidence_scores(forward_full(net, x));
    double sum = 0.0;
    for (float s : scores) sum += s;
    return sum / static_cast<double>(scores.size());
}

}  // namespace

void append_trace_rows(CurriculumTrace& trace, int update_index, double lambda_or_round, const NetworkF& net,
                       const MatF& target_inputs, const ShiftBins* eval_bins, double retained_fraction) {
    if (eval_bins == nullptr) {
        TraceRow row;
        row.update_index = update_index;
        row.lambda_or_round = lambda_or_round;
        row.mean_confidence = mean_confidence_on(net, target_inputs);
        row.retained_fraction = retained_fraction;
        trace.rows.push_back(row);
        return;
    }
    for (std::size_t b = 0; b < eval_bins->bins.size(); ++b) {
        const LabeledDataset& bin = eval_bins->bins[b];
        TraceRow row;
        row.update_index = update_index;
        row.lambda_or_round = lambda_or_round;
        row.bin_id = static_cast<int>(b);
        row.bin_lo = eval_bins->edges[b];
        row.bin_hi = eval_bins->edges[b + 1];
        row.accuracy = bin.size() > 0 ? evaluate_accuracy(net, bin) : -1.0;
        row.mean_confidence = mean_confidence_on(net, bin.features);
        row.retained_fraction = retained_fraction;
        trace.rows.push_back(row);
    }
}

void write_trace_csv(const CurriculumTrace& trace, std::ostream& out) {
    out << "update_index,lambda_or_round,bin_id,bin_lo,bin_hi,accuracy,mean_confidence,retained_fraction\n";
    for (const TraceRow& r : trace.rows) {
        out << r.update_index << ',' << r.lambda_or_round << ',' << r.bin_id << ',' << r.bin_lo << ',' << r.bin_hi
            << ',' << r.accuracy << ',' << r.mean_confidence << ',' << r.retained_fraction << '\n';
    }
}

void write_trace_csv(const CurriculumTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open trace output file: " + path);
    write_trace_csv(trace, out);
    if (!out.good()) throw std::runtime_error("failed writing trace output file: " + path);
}

}  // namespace gradapt
