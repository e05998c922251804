# version header written into every learned-table file
TABLE_FORMAT_VERSION = 1

# header tag of learned-table files
TABLE_FORMAT_TAG = 'rootshield-table'
