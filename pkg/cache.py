#! -*- coding: utf-8 -*-

# Adapted from https://code.activestate.com/recipes/576642/

import json
import os
import shutil


class PersistentDict(dict):
    """ Persistent dictionary used for dataset and run manifests.

    The dict is kept in memory and written to disk on close or sync, through
    a temporary file that is then moved into place (atomic commit).

    Output format is 'json' (sorted keys, so identical contents give
    identical bytes) or 'keyvalue' (one key=value line per entry, sorted).
    Input format is discovered automatically.
    """

    FORMATS = ('json', 'keyvalue')

    def __init__(self, filename, flag='c', mode=None, format_='json', *args, **kwds):
        if format_ not in self.FORMATS:
            raise NotImplementedError('Unknown format: ' + repr(format_))
        self.flag = flag                    # r=readonly, c=create or update, or n=new
        self.mode = mode                    # None or an octal triple like 0o644
        self.format = format_
        self.filename = str(filename)
        if flag != 'n' and os.access(self.filename, os.R_OK):
            with open(self.filename, 'r', encoding='utf-8') as fileobj:
                self.load(fileobj)
        dict.__init__(self, *args, **kwds)

    def sync(self):
        """ Write dict to disk
        """
        if self.flag == 'r':
            return
        tempname = self.filename + '.tmp'
        fileobj = open(tempname, 'w', encoding='utf-8', newline='\n')
        try:
            self.dump(fileobj)
        except Exception:
            fileobj.close()
            os.remove(tempname)
            raise
        finally:
            fileobj.close()
        shutil.move(tempname, self.filename)    # atomic commit
        if self.mode is not None:
            os.chmod(self.filename, self.mode)

    def close(self):
        self.sync()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def dump(self, fileobj):
        if self.format == 'json':
            json.dump(self, fileobj, sort_keys=True, indent=1)
            fileobj.write('\n')
        else:
            for key in sorted(self):
                value = self[key]
                if isinstance(value, (list, tuple)):
                    value = ','.join(str(v) for v in value)
                text = str(value)
                if '\n' in text or '=' in str(key):
                    raise ValueError('Cannot store {}={!r} in key=value format'.format(key, text))
                fileobj.write('{}={}\n'.format(key, text))

    def load(self, fileobj):
        text = fileobj.read()
        try:
            return self.update(json.loads(text))
        except ValueError:
            pass
        entries = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith('#'):
                continue
            if '=' not in line:
                raise ValueError('{}:{} is not in a supported format'.format(self.filename, lineno))
            key, value = line.split('=', 1)
            entries[key.strip()] = value.strip()
        self.update(entries)
