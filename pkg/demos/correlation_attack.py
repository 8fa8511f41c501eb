"""Walk through the correlated-coin attack on P1 against a 2-load register.

Runs the attack, prints the adversary as text and replays both coin
branches so the final (a, b) pair can be read off each one.
"""
from linlab import experiments as ex
from linlab.lts import compose
from linlab.programs import make_program


def main():
    prog = make_program("P1")
    for impl in ("atr", "dlr"):
        result = ex.correlation_attack(prog, impl)
        print(f"P1 with {impl}: {'a = b forced' if result.violated else 'no adversary forces a = b'}")
        if result.violated:
            print(result.witness.to_text(compose(prog, ex.make_impl(impl, prog.bounds))))
    run = ex.run_script(ex.scripted("dlr_p1"))
    print("scripted run matches the correlated target:", run.matches_target())
    for coin, trace in sorted(run.traces.items()):
        print(f"  coin={coin}: {trace}")


if __name__ == "__main__":
    main()
