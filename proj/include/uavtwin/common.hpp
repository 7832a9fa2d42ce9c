#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace uavtwin {

/// Base for every error the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidStageError : public Error { public: using Error::Error; };
class NotApplicableError : public Error { public: using Error::Error; };
class UncalibratedGainError : public Error { public: using Error::Error; };
class NearFieldError : public Error { public: using Error::Error; };
class NoCoverageError : public Error { public: using Error::Error; };
class ScenarioError : public Error { public: using Error::Error; };

using NodeId = std::string;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// Sum of powers given in dBm, evaluated in milliwatts.
template <class Range>
double sum_dbm(const Range& powers_dbm) {
  double mw = 0.0;
  for (double p : powers_dbm) mw += db_to_linear(p);
  return linear_to_db(mw);
}

inline double sum_dbm(double a, double b) {
  return linear_to_db(db_to_linear(a) + db_to_linear(b));
}

} // namespace uavtwin
