from colorama import init, Fore, Style
from tabulate import tabulate
from tqdm import tqdm
from concurrent.futures import ThreadPoolExecutor
import logging
import sys

init()  # Initialize colorama

logger = logging.getLogger("Helpers")


def print_header(text):
    """Print formatted header"""
    print(f"\n{Fore.CYAN}{Style.BRIGHT}{text}{Style.RESET_ALL}")


def print_error(text):
    """Print error message to standard error"""
    print(f"{Fore.RED}{Style.BRIGHT}Error: {text}{Style.RESET_ALL}", file=sys.stderr)


def print_warning(text):
    print(f"{Fore.YELLOW}{text}{Style.RESET_ALL}")


def print_success(text):
    """Print success message"""
    print(f"{Fore.GREEN}{Style.BRIGHT}{text}{Style.RESET_ALL}")


def format_pass_fail(passed):
    return f"{Fore.GREEN}PASS{Style.RESET_ALL}" if passed else f"{Fore.RED}FAIL{Style.RESET_ALL}"


def format_table(rows, headers, floatfmt=".3e"):
    """Grid table for console summaries"""
    return tabulate(rows, headers=headers, tablefmt="grid", floatfmt=floatfmt)


def format_assertions(assertions):
    """Table of named study assertions with colored pass/fail"""
    rows = [[name, format_pass_fail(passed)] for name, passed in assertions.items()]
    return tabulate(rows, headers=["Assertion", "Result"], tablefmt="grid")


def run_indexed(fn, items, threads=1, desc=None):
    """
    Apply fn to every item, optionally on a thread pool.
    Results come back in item order whatever the completion order;
    the first failure is re-raised after logging.
    """
    items = list(items)
    results = [None] * len(items)
    progress = tqdm(total=len(items), desc=desc, disable=not desc, leave=False)
    try:
        if threads <= 1 or len(items) <= 1:
            for i, item in enumerate(items):
                results[i] = fn(item)
                progress.update(1)
            return results

        with ThreadPoolExecutor(max_workers=threads) as executor:
            future_to_index = {executor.submit(fn, item): i for i, item in enumerate(items)}
            for future in future_to_index:
                index = future_to_index[future]
                try:
                    results[index] = future.result()
                except Exception as e:
                    logger.error(f"Task {index} failed: {str(e)}")
                    raise
                progress.update(1)
        return results
    finally:
        progress.close()
