/* Copyright 2026 The bayesseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "bayesseg/metrics.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "bayesseg/io.hpp"

namespace bayesseg {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den, const char* what) {
  if (den == 0) {
    std::clog << "warning: " << what << " is undefined (zero denominator)\n";
    return std::nullopt;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

template <typename A, typename B>
void require_same_shape(const Plane<A>& a, const Plane<B>& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

ReliabilityCounts confusion(const LabelMap& pred, const LabelMap& truth, const CertaintyMask& mask) {
  require_same_shape(pred, truth, "confusion");
  require_same_shape(pred, mask, "confusion");
  ReliabilityCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool correct = pred.data[i] == truth.data[i];
    const bool certain = mask.data[i] != 0;
    if (!correct && !certain) ++c.tp;
    else if (correct && !certain) ++c.fp;
    else if (correct && certain) ++c.tn;
    else ++c.fn;
  }
  return c;
}

std::optional<double> npv(const ReliabilityCounts& c) { return ratio(c.tn, c.tn + c.fn, "NPV"); }
std::optional<double> tpr(const ReliabilityCounts& c) { return ratio(c.tp, c.tp + c.fn, "TPR"); }
std::optional<double> ua(const ReliabilityCounts& c) { return ratio(c.tp + c.tn, c.total(), "UA"); }

IouCounts& IouCounts::operator+=(const IouCounts& o) {
  if (o.intersection.size() != intersection.size()) throw std::invalid_argument("IouCounts: class count mismatch");
  for (std::size_t k = 0; k < intersection.size(); ++k) {
    intersection[k] += o.intersection[k];
    union_[k] += o.union_[k];
  }
  return *this;
}

IouCounts iou_counts(const LabelMap& pred, const LabelMap& truth, int num_classes) {
  require_same_shape(pred, truth, "iou");
  IouCounts out(num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = pred.data[i];
    const auto t = truth.data[i];
    if (p >= num_classes || t >= num_classes) throw std::invalid_argument("iou: label out of range");
    if (p == t) {
      ++out.intersection[p];
      ++out.union_[p];
    } else {
      ++out.union_[p];
      ++out.union_[t];
    }
  }
  return out;
}

IouResult iou(const IouCounts& counts) {
  IouResult r;
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < counts.union_.size(); ++k) {
    if (counts.union_[k] == 0) {
      r.per_class.push_back(std::nullopt);
      continue;
    }
    const double v = static_cast<double>(counts.intersection[k]) / static_cast<double>(counts.union_[k]);
    r.per_class.push_back(v);
    sum += v;
    ++present;
  }
  if (present > 0) r.mean = sum / present;
  return r;
}

IouResult iou(const LabelMap& pred, const LabelMap& truth, int num_classes) {
  return iou(iou_counts(pred, truth, num_classes));
}

ReliabilityReport ReliabilityReport::from_counts(const ReliabilityCounts& counts, const IouCounts& ic) {
  ReliabilityReport r;
  r.counts = counts;
  r.iou_counts = ic;
  r.npv = bayesseg::npv(counts);
  r.tpr = bayesseg::tpr(counts);
  r.ua = bayesseg::ua(counts);
  auto res = iou(ic);
  r.iou_per_class = std::move(res.per_class);
  r.mean_iou = res.mean;
  return r;
}

void ReliabilityAccumulator::add(const LabelMap& pred, const LabelMap& truth, const CertaintyMask& mask) {
  counts_ += confusion(pred, truth, mask);
  iou_ += iou_counts(pred, truth, num_classes_);
}

std::string format_metric(const std::optional<double>& v, int precision) {
  if (!v) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, *v);
  return buf;
}

std::string encode_report(const ReliabilityReport& r) {
  std::ostringstream out;
  out << "REPORT1\n";
  out << "tp=" << r.counts.tp << "\nfp=" << r.counts.fp << "\ntn=" << r.counts.tn << "\nfn=" << r.counts.fn << "\n";
  out << "classes=" << r.iou_counts.intersection.size() << "\n";
  for (std::size_t k = 0; k < r.iou_counts.intersection.size(); ++k) {
    out << "intersection_" << k << "=" << r.iou_counts.intersection[k] << "\n";
    out << "union_" << k << "=" << r.iou_counts.union_[k] << "\n";
  }
  out << "npv=" << format_metric(r.npv) << "\ntpr=" << format_metric(r.tpr) << "\nua=" << format_metric(r.ua) << "\n";
  for (std::size_t k = 0; k < r.iou_per_class.size(); ++k) {
    out << "iou_" << k << "=" << format_metric(r.iou_per_class[k]) << "\n";
  }
  out << "mean_iou=" << format_metric(r.mean_iou) << "\n";
  return out.str();
}

ReliabilityReport decode_report(std::string_view text) {
  detail::header_end(text, "REPORT1");
  std::istringstream in{std::string(text)};
  std::string line;
  std::getline(in, line);
  ReliabilityCounts c;
  IouCounts ic;
  bool have_classes = false;
  auto number = [](const std::string& v, const std::string& key) {
    try {
      return static_cast<std::uint64_t>(std::stoull(v));
    } catch (const std::exception&) {
      throw FormatError("REPORT1: bad value for '" + key + "'");
    }
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("REPORT1: malformed line '" + line + "'");
    const auto key = line.substr(0, eq);
    const auto val = line.substr(eq + 1);
    if (key == "tp") c.tp = number(val, key);
    else if (key == "fp") c.fp = number(val, key);
    else if (key == "tn") c.tn = number(val, key);
    else if (key == "fn") c.fn = number(val, key);
    else if (key == "classes") {
      ic = IouCounts(static_cast<int>(number(val, key)));
      have_classes = true;
    } else if (key.rfind("intersection_", 0) == 0 || key.rfind("union_", 0) == 0) {
      if (!have_classes) throw FormatError("REPORT1: class counts before 'classes'");
      const bool is_inter = key[0] == 'i';
      const auto k = number(key.substr(is_inter ? 13 : 6), key);
      if (k >= ic.intersection.size()) throw FormatError("REPORT1: class index out of range");
      (is_inter ? ic.intersection : ic.union_)[k] = number(val, key);
    }
    // Derived metrics are recomputed from the counts.
  }
  if (!have_classes) throw FormatError("REPORT1: missing 'classes'");
  return ReliabilityReport::from_counts(c, ic);
}

}  // namespace bayesseg
