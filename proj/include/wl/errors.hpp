#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wl {

/// Base class of all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WL_ERROR_TYPE(Name)            \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

WL_ERROR_TYPE(ConfigError);
WL_ERROR_TYPE(InvalidInput);
WL_ERROR_TYPE(NondegeneracyViolation);
WL_ERROR_TYPE(NoConvergence);
WL_ERROR_TYPE(NotSeparated);
WL_ERROR_TYPE(BoxTooSmall);
WL_ERROR_TYPE(NoRelevantSaddle);
WL_ERROR_TYPE(TooLarge);
WL_ERROR_TYPE(ShapeMismatch);
WL_ERROR_TYPE(DegenerateFit);
WL_ERROR_TYPE(RadiusTooSmall);
WL_ERROR_TYPE(PhasePositivityViolated);
WL_ERROR_TYPE(ConfigInvalid);
WL_ERROR_TYPE(ComponentAmbiguous);
WL_ERROR_TYPE(RateOverflow);
WL_ERROR_TYPE(AllCensored);
WL_ERROR_TYPE(InsufficientData);

#undef WL_ERROR_TYPE

/// Non-fatal diagnostics (overflow clamps, underflowed weights, quality notes).
/// Callers that pass nullptr simply drop the notes.
struct Warnings {
  std::vector<std::string> notes;

  void add(std::string note) { notes.push_back(std::move(note)); }
  bool empty() const { return notes.empty(); }
  std::size_t count() const { return notes.size(); }
};

inline void warn(Warnings* sink, const std::string& note) {
  if (sink) sink->add(note);
}

}  // namespace wl
