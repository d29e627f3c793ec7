#pragma once

#include <set>
#include <string>
#include <vector>

#include "dpaudit/taxonomy.hpp"
#include "dpaudit/trace.hpp"

namespace dpaudit {

struct DetectorConfig {
  int maze_depth_threshold = 3;
  int prominence_gap_threshold = 2;
  std::set<std::string> ambiguous_label_lexicon{"info request", "data processing",
                                                "information request", "data inquiry",
                                                "general inquiry"};
  // Headings too generic to say what a section holds.
  std::set<std::string> vague_section_lexicon{"additional information", "other disclosures",
                                              "more information", "miscellaneous", "legal"};
  std::set<Sensitivity> excessive_sensitivities{Sensitivity::GovId, Sensitivity::Ssn,
                                                Sensitivity::Biometric};
  int min_required_channels = 2;

  // Lowercase-normalizes both lexicons; throws PreconditionError when a
  // threshold is below 1.
  DetectorConfig& normalize();
};

// Per-category detectors. Each expects a trace for which validate_trace
// reports nothing and returns at most one finding per triggered subtype.
std::vector<Finding> detect_adding_steps(const WorkflowTrace& trace, const DetectorConfig& config);
std::vector<Finding> detect_conflicting_info(const WorkflowTrace& trace,
                                             const DetectorConfig& config);
std::vector<Finding> detect_creating_barriers(const WorkflowTrace& trace,
                                              const DetectorConfig& config);
std::vector<Finding> detect_feedforward_ambiguity(const WorkflowTrace& trace,
                                                  const DetectorConfig& config);
std::vector<Finding> detect_hidden_info(const WorkflowTrace& trace, const DetectorConfig& config);
std::vector<Finding> detect_info_without_context(const WorkflowTrace& trace,
                                                 const DetectorConfig& config);
std::vector<Finding> detect_privacy_mazes(const WorkflowTrace& trace, const DetectorConfig& config);
std::vector<Finding> detect_visual_prominence(const WorkflowTrace& trace,
                                              const DetectorConfig& config);

// Runs all eight detectors. Throws PreconditionError for an invalid trace.
AuditReport detect_all(const WorkflowTrace& trace, const DetectorConfig& config = {});

// Element that carries a rights pathway: advertises or provides a right, is a
// form reference, or is the entry point of a submission channel.
bool is_rights_bearing(const WorkflowTrace& trace, const InterfaceElement& element);

}  // namespace dpaudit
