#ifndef PATRIOT_DEMO_HPP
#define PATRIOT_DEMO_HPP

#include <string>
#include <vector>

#include "patriot/runner.hpp"
#include "patriot/testbed.hpp"

namespace patriot::demo {

/// Built-in smart street testbeds #1..#4, scaling from all-adapter-slot
/// (stand-ins for physical devices) to fully simulated:
///   1 - one house, all devices and the gateway as adapter slots
///   2 - one house, device adapter slots, simulated gateway
///   3 - house A adapter slots + adapter gateway; house B fully simulated
///       with simulated gateway and street server
///   4 - two houses and the street server, everything simulated
TestbedConfig builtin_config(int id);

/// The exact document `builtin_config` was loaded from (also what the
/// `demo` CLI subcommand prints).
std::string builtin_config_document(int id);

/// Sample suites for a built-in config: a smoke suite always; scenario
/// and resilience suites when the config has simulated devices.
std::vector<TestSuite> builtin_suites(int id);

/// Smoke suite generated from any config: every provider emits, every
/// simulated actuator answers its status endpoint.
TestSuite smoke_suite(const TestbedConfig& config);

/// Reference state machines, exposed for conformance testing.
ActuatorSpec garage_door_spec(const std::string& device_id, const ConnectorSpec& connector);
ActuatorSpec coffee_machine_spec(const std::string& device_id, const ConnectorSpec& connector);

} // namespace patriot::demo

#endif
