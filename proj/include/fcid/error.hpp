#pragma once

#include <stdexcept>
#include <string>

namespace fcid {

// All library failures surface as fcid::Error. `stage` names the pipeline
// step that failed (empty for leaf operations).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message, std::string stage = {})
        : std::runtime_error(message), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace fcid
