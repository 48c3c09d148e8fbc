#pragma once

#include <string>

#include "invnet/credit.hpp"

namespace invnet {

/// Everything needed to resume a run or evaluate a trained model. The
/// network architecture is embedded, so loading needs no config file.
struct Checkpoint {
    Network net;
    AdamState opt;
    long step = 0;
    long epoch = 0;  // next epoch to run when resuming
    std::string algorithm;
};

/// Little-endian binary, versioned magic header, named tensor records,
/// trailing CRC-32. save -> load -> save is byte-identical.
void checkpoint_save(const std::string& path, const Checkpoint& checkpoint);
Checkpoint checkpoint_load(const std::string& path);

}  // namespace invnet
