#!/usr/bin/env python3
"""
blindguide - Main Entry Point
Blind image restoration by guided diffusion sampling.
"""

from blindguide.cli import main

if __name__ == "__main__":
    main()
