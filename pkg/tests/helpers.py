"""Shared test utilities."""

from stepchef.skills import ToolInvocation


def mutate_invalid(rng, registry):
    """Build an invocation guaranteed to violate the registry's schema."""
    kind = rng.choice(["unknown", "missing", "badtype", "extra", "badenum"])
    spec = rng.choice(list(registry.specs))
    args = {}
    for p in spec.params:
        if p.kind == "number":
            args[p.name] = rng.uniform(0, 1)
        elif p.kind == "enum":
            args[p.name] = rng.choice(p.values)
        else:
            args[p.name] = "milk"
    if kind == "unknown":
        return ToolInvocation("skill_" + str(rng.randint(0, 10**6)), args)
    required = [p for p in spec.params if p.required]
    typed = [p for p in spec.params if p.kind in ("number", "enum")]
    enums = [p for p in spec.params if p.kind == "enum"]
    if kind == "missing" and required:
        del args[rng.choice(required).name]
        return ToolInvocation(spec.name, args)
    if kind == "badtype" and typed:
        p = rng.choice(typed)
        args[p.name] = [1, 2] if p.kind == "number" else 3.5
        return ToolInvocation(spec.name, args)
    if kind == "badenum" and enums:
        args[rng.choice(enums).name] = "no_such_value"
        return ToolInvocation(spec.name, args)
    args["bogus_extra_param"] = 1
    return ToolInvocation(spec.name, args)
