from app.config.config import config

__all__ = ['config'] 