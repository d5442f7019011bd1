"""
Discrete search spaces
======================

Every tunable is a bounded arithmetic grid: min, max, granularity and an
optional unit suffix. A space is the cross product of its parameters, and
everything downstream (screening, optimizers, datasets) speaks in terms
of grid configurations.
"""

from confopt import ParameterSpec, SearchSpace, bundled_path, parse_config

# Two hand-built parameters: a CPU request in millicores and a memory
# request in mebibytes.
space = SearchSpace(
    (
        ParameterSpec("webCpu", 500, 1125, 125, suffix="m"),
        ParameterSpec("webMemory", 256, 1024, 256, suffix="Mi"),
    )
)
print(f"{space.dimension} parameters, {space.size} configurations")
for spec in space.parameters:
    print(f"  {spec.name}: {spec.level_count} levels from {spec.minimum}"
          f" to {spec.maximum} (step {spec.granularity}{spec.suffix})")

# Configurations hold actual grid values, not level indices. Rendering
# attaches the suffixes Kubernetes-style.
config = space.config_from_indices((2, 1))
print("\nsample configuration:", config.settings)
print("rendered:", space.render(config))

# Normalized coordinates put every parameter on [0, 1]; the surrogate
# model and the distance metrics live in that cube.
point = space.to_normalized(config)
print("normalized:", point)
print("round trip:", space.from_normalized(point).settings)

# Enumeration is odometer order: last parameter fastest. That order is
# what exhaustive collection and dataset files use.
print("\nfirst four of enumeration:")
for config in list(space.iter_configurations())[:4]:
    print("  ", config.settings)

# The shipped toystore config describes a four-service chain; its space
# is the same machinery at 8 dimensions.
toystore = parse_config(bundled_path("toystore.yaml"))
print(f"\ntoystore: {toystore.space.dimension} parameters,"
      f" {toystore.space.size} configurations")
print("names:", ", ".join(toystore.space.names))
