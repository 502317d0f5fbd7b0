"""Entry point for plateau_cli package"""

from .main import main

if __name__ == "__main__":
    main()
