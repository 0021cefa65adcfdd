# app/main.py
import logging

from app.config.settings import settings
from app.routes import cli


def configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main() -> None:
    configure_logging()
    cli()


if __name__ == "__main__":
    main()
