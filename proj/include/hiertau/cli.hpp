#pragma once

namespace hiertau {

// Entry point behind the hiertau binary; exposed so tests can drive the
// command surface in process. Argv follows main() conventions.
int cli_main(int argc, const char* const* argv);

}  // namespace hiertau
