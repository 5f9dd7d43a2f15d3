"""
Writing atomic models in the structured-English dialect
=======================================================

Sentences end with "!".  Parsing gives an AST with line numbers, checking
gives diagnostics, compiling gives an AtomicSpec, and pretty printing goes
back to text.
"""

from simse.devs import check, compile, parse, pretty_print, simulate
from simse.devs import INPUT, Event, MessageValue

TEXT = """\
A Token has a value!
the range of Token's value is Integer!
accepts input on In with type Token!
generates output on Out with type Token!
to start passivate in idle!
when in idle and receive Token go to busy!
hold in busy for time 2!
after busy output Token!
from busy go to idle!
"""

ast = parse(TEXT)
for st in ast.statements:
    print(f"{st.line:>2}  {st.kind}")

print("diagnostics:", [str(d) for d in check(ast)] or "none")
relay = compile(ast, name="relay")
print(relay.ta, relay.external_transitions)

# Round trip: the printed text compiles back to the same structure.
printed = pretty_print(relay)
print(printed)
assert compile(parse(printed), name="relay") == relay

trace = simulate(relay, [Event(1, (), "In", INPUT, MessageValue("Token", {"value": 3}))])
print([(e.time, e.port, e.value) for e in trace.outputs()])

# Mistakes come back as diagnostics rather than exceptions.
broken = parse("to start hold in a for time 1!\nwhen in a and receive Nothing go to b!\n")
for d in check(broken):
    print(d)
