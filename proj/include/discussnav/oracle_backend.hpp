#pragma once

#include <vector>

#include "discussnav/backend.hpp"
#include "discussnav/environment.hpp"
#include "discussnav/types.hpp"

namespace discussnav {

/// Answers every role from ground truth for worlds and episodes that follow the
/// synthetic grammar. Test and benchmark use only.
class OracleBackend : public Backend {
 public:
  OracleBackend(const EnvGraph& world, std::vector<Episode> episodes);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return "oracle"; }

  /// Ground-truth next move from `at` for `episode` (STOP at the goal).
  Prediction next_move(const Episode& episode, const ViewpointId& at) const;

 private:
  const Episode& episode_for(const std::string& text) const;
  std::string answer(const CompletionRequest& request) const;

  const EnvGraph& world_;
  std::vector<Episode> episodes_;
};

}  // namespace discussnav
