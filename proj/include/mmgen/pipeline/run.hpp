#pragma once

#include "mmgen/clients/clients.hpp"
#include "mmgen/clients/stub_provider.hpp"
#include "mmgen/pipeline/config.hpp"
#include "mmgen/pipeline/journal.hpp"
#include "mmgen/pipeline/scoring.hpp"

#include <filesystem>
#include <functional>
#include <memory>

namespace mmgen::pipeline {

/// Builds the transport behind one configured service.
using TransportFactory = std::function<std::shared_ptr<clients::Transport>(const clients::ServiceConfig&)>;

/// http(s) endpoints get an HttpTransport; the scheme "stub:" maps to one
/// process-wide in-memory StubProvider.
TransportFactory default_transport_factory();
std::shared_ptr<clients::StubProvider> process_stub();

struct RunHooks {
    /// Called after each journal append, while the append lock is held.
    /// Throwing Interrupted here simulates a crash after that stage.
    Journal::Hook after_append;
    clients::ClientOptions client_options;
};

struct RunSummary {
    std::filesystem::path run_dir;
    std::size_t items = 0;
    std::size_t scored = 0;
    std::size_t failed = 0;
    double coverage = 1.0;
    std::size_t executed = 0; // stage tasks run by this invocation
    std::size_t replayed = 0; // stage results taken from the journal
};

/// Fresh run into config.output_dir. Throws ConfigError (including when the
/// directory already holds a journal), AuthError, NetworkError on a failed
/// health probe, and other fatal errors. Per-item failures are recorded.
RunSummary run(const RunConfig& config, const TransportFactory& factory = default_transport_factory(),
               const RunHooks& hooks = {});

/// Continues a run from its journal. Throws CorruptJournal before touching
/// any file when the journal does not parse.
RunSummary resume(const std::filesystem::path& run_dir,
                  const TransportFactory& factory = default_transport_factory(), const RunHooks& hooks = {});

} // namespace mmgen::pipeline
