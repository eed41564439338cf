import textwrap

from rich.console import Console
from rich.markdown import Markdown
from rich.rule import Rule

console = Console()
error_console = Console(stderr=True, style="red")


def display_markdown_message(message, error=False):
    """
    Renders an indented multiline string as markdown, one paragraph at a time,
    each followed by a blank line. `---` paragraphs become rules. Errors go to stderr.
    """
    target = error_console if error else console

    for block in textwrap.dedent(message).strip("\n").split("\n\n"):
        block = block.strip()
        if not block:
            continue
        if block == "---":
            target.print(Rule(style="white"))
            continue
        try:
            target.print(Markdown(block))
        except UnicodeEncodeError:
            target.print(block, markup=False, highlight=False)
        target.print("")
