#pragma once

#include <iosfwd>
#include <string>

#include "nlistack/stacking.hpp"

namespace nlistack {

// Versioned JSON archive for trained stacked models.  The document is
// self-describing (a format marker plus a version field precede the
// payload); loading rejects foreign documents and unsupported versions
// with a DataError instead of misreading them.  A save/load round trip
// reproduces predictions exactly: weights are written with enough
// precision to reread to the identical double.

void save_stacked_model(const StackedModel& model, std::ostream& out);
void save_stacked_model(const StackedModel& model, const std::string& path);

StackedModel load_stacked_model(std::istream& in);
StackedModel load_stacked_model(const std::string& path);

} // namespace nlistack
