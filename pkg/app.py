# app.py
"""
Entry point for the LwR toolkit.
Runs the command-line interface (train, eval, sweep, synth).
"""
from dotenv import load_dotenv

from cli.main import main

# Load environment variables
load_dotenv()

if __name__ == "__main__":
    main()
