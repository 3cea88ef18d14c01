#pragma once

#include <stdexcept>
#include <string>

namespace gelshoot {

// bad parameters; the CLI maps this to exit code 1
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// numerical failures carry a short machine readable kind; CLI exit code 2
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

struct BlowUp : NumericalError {
    double where;
    BlowUp(double at, const std::string& what) : NumericalError("BlowUp", what), where(at) {}
};

struct StepUnderflow : NumericalError {
    double where;
    StepUnderflow(double at, const std::string& what)
        : NumericalError("StepUnderflow", what), where(at) {}
};

struct OutOfRange : NumericalError {
    explicit OutOfRange(const std::string& what) : NumericalError("OutOfRange", what) {}
};

struct BracketFailure : NumericalError {
    explicit BracketFailure(const std::string& what) : NumericalError("BracketFailure", what) {}
};

struct NonContraction : NumericalError {
    explicit NonContraction(const std::string& what) : NumericalError("NonContraction", what) {}
};

struct NoSignChange : NumericalError {
    explicit NoSignChange(const std::string& what) : NumericalError("NoSignChange", what) {}
};

struct NoPlateaus : NumericalError {
    explicit NoPlateaus(const std::string& what) : NumericalError("NoPlateaus", what) {}
};

struct PositivityViolation : NumericalError {
    explicit PositivityViolation(const std::string& what)
        : NumericalError("PositivityViolation", what) {}
};

struct OriginOnCurve : NumericalError {
    explicit OriginOnCurve(const std::string& what) : NumericalError("OriginOnCurve", what) {}
};

}  // namespace gelshoot
