"""
System Monitoring for PrimeLab
Memory and CPU facts used for table budgets and start-up logs
"""

import logging
import os

import psutil

logger = logging.getLogger('PrimeLab.System')


def get_system_info():
    """Get the host facts that matter for sieving"""
    try:
        memory = psutil.virtual_memory()
        return {
            'cpu_count': psutil.cpu_count(logical=True) or 1,
            'memory_total_mb': memory.total // (1024 * 1024),
            'memory_available_mb': memory.available // (1024 * 1024),
            'pid': os.getpid(),
        }
    except Exception as e:
        logger.error(f"Error getting system info: {e}", exc_info=True)
        return {}


def available_memory_bytes():
    """Available physical memory in bytes, or None when psutil cannot tell"""
    try:
        return psutil.virtual_memory().available
    except Exception as e:
        logger.debug(f"virtual_memory unavailable: {e}")
        return None


def log_system_info():
    """Log host facts once at start-up"""
    info = get_system_info()
    if info:
        logger.info(f"Host: {info['cpu_count']} CPUs, "
                    f"{info['memory_available_mb']}/{info['memory_total_mb']} MB available")
    return info
