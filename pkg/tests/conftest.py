import sys

_capman = None


def pytest_configure(config):
    global _capman
    _capman = config.pluginmanager.getplugin("capturemanager")


def criterion_line(number: int, label: str, ok: bool, detail: str = ""
                   ) -> None:
    """One pass/fail line per acceptance criterion, bypassing capture.

    Default capture redirects file descriptor 1 itself, so writing to
    ``sys.__stdout__`` is not enough; capture is suspended around the
    print so the line reaches the real stdout.
    """
    status = "PASS" if ok else "FAIL"
    extra = f" ({detail})" if detail else ""
    line = f"[{status}] criterion {number}: {label}{extra}"
    if _capman is not None:
        with _capman.global_and_fixture_disabled():
            print(line, file=sys.stdout, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)
